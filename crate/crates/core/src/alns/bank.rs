use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DestroyOp {
    Random,
    Worst,
    Shaw,
    RandomRoute,
    Sisr,
}

impl DestroyOp {
    pub const ALL: [DestroyOp; 5] = [
        DestroyOp::Random,
        DestroyOp::Worst,
        DestroyOp::Shaw,
        DestroyOp::RandomRoute,
        DestroyOp::Sisr,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairOp {
    Greedy,
    Regret2,
}

impl RepairOp {
    pub const ALL: [RepairOp; 2] = [RepairOp::Greedy, RepairOp::Regret2];
}

/// Adaptive weights for one family of operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorBank {
    pub weights: Vec<f64>,
    pub scores: Vec<f64>,
    pub uses: Vec<u32>,
}

impl OperatorBank {
    pub fn new(n: usize) -> Self {
        OperatorBank {
            weights: vec![1.0; n],
            scores: vec![0.0; n],
            uses: vec![0; n],
        }
    }

    /// Roulette-wheel selection proportional to weight.
    pub fn select<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let total: f64 = self.weights.iter().sum();
        let mut x = rng.random::<f64>() * total;
        let mut pick = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            if x < *w {
                pick = i;
                break;
            }
            x -= w;
        }
        self.uses[pick] += 1;
        pick
    }

    pub fn reward(&mut self, op: usize, score: f64) {
        self.scores[op] += score;
    }

    /// End-of-segment update `w <- w(1-r) + r·score/uses`; idle operators
    /// keep their weight.
    pub fn adapt(&mut self, reaction: f64) {
        for i in 0..self.weights.len() {
            if self.uses[i] > 0 {
                let mean = self.scores[i] / f64::from(self.uses[i]);
                self.weights[i] = (self.weights[i] * (1.0 - reaction) + reaction * mean).max(1e-6);
            }
            self.scores[i] = 0.0;
            self.uses[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn idle_operator_keeps_weight() {
        let mut b = OperatorBank::new(3);
        b.weights[2] = 2.5;
        b.uses[0] = 2;
        b.scores[0] = 66.0;
        b.adapt(0.1);
        assert_eq!(b.weights[2], 2.5);
        assert!((b.weights[0] - (0.9 + 3.3)).abs() < 1e-12);
        assert!(b.uses.iter().all(|&u| u == 0));
    }

    #[test]
    fn full_reaction_replaces_weight() {
        let mut b = OperatorBank::new(1);
        b.uses[0] = 4;
        b.scores[0] = 36.0;
        b.adapt(1.0);
        assert_eq!(b.weights[0], 9.0);
    }

    proptest! {
        #[test]
        fn weights_stay_positive(stream in prop::collection::vec((0usize..4, prop::sample::select(vec![0.0, 9.0, 13.0, 33.0])), 1..400)) {
            let mut b = OperatorBank::new(4);
            for (k, (op, score)) in stream.into_iter().enumerate() {
                b.uses[op] += 1;
                b.reward(op, score);
                if k % 25 == 24 {
                    b.adapt(0.1);
                }
            }
            b.adapt(0.1);
            prop_assert!(b.weights.iter().all(|w| *w > 0.0));
        }
    }
}
