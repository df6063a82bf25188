use std::path::{Path, PathBuf};

use fleetmix_core::alns::AlnsParams;
use fleetmix_core::energy::PowerContext;
use fleetmix_core::model::{load_instance, Instance};
use fleetmix_core::saa::{EstimationPolicy, HorizonSpec, MixGrid, SweepSpec};
use fleetmix_core::scen::{mth_synthetic, regionh_synthetic, MthSpec, RegionHSpec, SamplerSpec};
use fleetmix_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Seed of the bundled synthetic instances.
pub const CASE_SEED: u64 = 2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    #[default]
    Regionh,
    Mth,
    Custom,
}

/// Everything a command needs. Read from `--config`, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub case: Case,
    /// Instance file; the case preset generates one when absent.
    pub instance: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: usize,
    pub out: PathBuf,
    pub alns: AlnsParams,
    pub policy: EstimationPolicy,
    pub power: PowerContext,
    pub horizon: Option<HorizonSpec>,
    pub grid: Option<MixGrid>,
    pub sampler: Option<SamplerSpec>,
    pub sweep: Option<SweepSpec>,
    /// Restricts `optimize` and `sweep` to these count vectors, and fixes
    /// the fleet for `solve`, `verify` and `oracle` to the first one.
    pub mixes: Option<Vec<Vec<usize>>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: Case::default(),
            instance: None,
            scenario: None,
            seed: None,
            jobs: 1,
            out: PathBuf::from("out"),
            alns: AlnsParams::default(),
            policy: EstimationPolicy::default(),
            power: PowerContext::default(),
            horizon: None,
            grid: None,
            sampler: None,
            sweep: None,
            mixes: None,
        }
    }
}

impl RunConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
    }

    /// Fills case defaults and checks everything that can be checked up front.
    pub fn resolve(mut self, require_seed: bool) -> Result<Self> {
        if require_seed && self.seed.is_none() {
            return Err(Error::Config("a master seed is required (--seed or \"seed\" in the config)".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        for p in [&self.instance, &self.scenario].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        if self.case == Case::Custom && self.instance.is_none() {
            return Err(Error::Config("case custom needs --instance".into()));
        }
        self.horizon.get_or_insert(match self.case {
            Case::Regionh => HorizonSpec::region_h(),
            Case::Mth | Case::Custom => HorizonSpec::mth(),
        });
        self.sampler.get_or_insert_with(|| match self.case {
            Case::Regionh => SamplerSpec::region_h(),
            Case::Mth => SamplerSpec::mth(),
            Case::Custom => SamplerSpec::Independent {
                temperature: Default::default(),
            },
        });
        if self.grid.is_none() {
            self.grid = Some(match self.case {
                Case::Regionh => MixGrid::region_h(),
                Case::Mth => {
                    let spec = MthSpec::default();
                    MixGrid::mth(spec.small_drivers, spec.large_drivers)
                }
                Case::Custom => MixGrid::default(),
            });
        }
        self.alns.validate()?;
        self.policy.validate()?;
        self.power.validate()?;
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        if self.alns.time_limit_secs.is_some() {
            log::info!("an ALNS time limit makes results depend on machine speed");
        }
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("resolved config has a seed")
    }

    pub fn horizon(&self) -> HorizonSpec {
        self.horizon.expect("resolved config has a horizon")
    }

    pub fn sampler(&self) -> &SamplerSpec {
        self.sampler.as_ref().expect("resolved config has a sampler")
    }

    pub fn grid(&self) -> &MixGrid {
        self.grid.as_ref().expect("resolved config has a grid")
    }

    pub fn load_instance(&self) -> Result<Instance> {
        match (&self.instance, self.case) {
            (Some(p), _) => load_instance(p),
            (None, Case::Regionh) => regionh_synthetic(&RegionHSpec::default(), CASE_SEED),
            (None, Case::Mth) => mth_synthetic(&MthSpec::default(), CASE_SEED),
            (None, Case::Custom) => unreachable!("checked in resolve"),
        }
    }

    /// One line of JSON for CSV headers.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
