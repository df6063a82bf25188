/* tslint:disable */
/* eslint-disable */

/**
 * Both piecewise linear charging curves, plus the time each needs to move
 * a battery between two charge levels (kWh).
 */
export function charging_curves(from_soc: number, to_soc: number): string;

/**
 * Power draw of the electric van and cargo bike over a temperature range,
 * at the given speed and load.
 */
export function power_profile(t_min: number, t_max: number, speed_kmh: number, load_kg: number): string;

/**
 * Generates a random planar instance, routes it with ALNS and, when small,
 * checks the result against the exact solver.
 */
export function solve_demo(customers: number, vehicles: number, temperature: number, iterations: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly charging_curves: (a: number, b: number) => [number, number, number, number];
    readonly power_profile: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly solve_demo: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
