/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    fracture_count(): number;
    /**
     * The rasterized network with no growth applied.
     */
    initial(): Float32Array;
    materials(): string[];
    /**
     * A demo on an `n x n` grid with no fractures yet.
     */
    constructor(n: number);
    /**
     * Damage averaged onto cells.
     */
    pf_damage(): Float32Array;
    pf_failed(): boolean;
    /**
     * Loads the current network into a phase-field solve of `material` under axial extension.
     */
    pf_start(material: string): Float32Array;
    /**
     * Advances the solve by up to `k` steps, stopping early at failure.
     */
    pf_step(k: number): Float32Array;
    pf_steps(): number;
    /**
     * Simulated time in microseconds.
     */
    pf_time_us(): number;
    rule_failed(): boolean;
    /**
     * False once the network has failed or no tip can grow.
     */
    rule_running(): boolean;
    /**
     * Advances rule-based growth one step.
     */
    rule_step(): Float32Array;
    rule_steps(): number;
    /**
     * Draws a new network with `lo..=hi` fractures per direction and resets both simulations.
     */
    sample(seed: bigint, lo: number, hi: number): Float32Array;
    /**
     * Restarts rule-based growth under `mode`, e.g. `"X-vertical"`.
     */
    set_mode(mode: string): Float32Array;
    width(): number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_fracture_count: (a: number) => number;
    readonly demo_initial: (a: number) => [number, number];
    readonly demo_materials: (a: number) => [number, number];
    readonly demo_new: (a: number) => [number, number, number];
    readonly demo_pf_damage: (a: number) => [number, number, number, number];
    readonly demo_pf_failed: (a: number) => number;
    readonly demo_pf_start: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_pf_step: (a: number, b: number) => [number, number, number, number];
    readonly demo_pf_steps: (a: number) => number;
    readonly demo_pf_time_us: (a: number) => number;
    readonly demo_rule_failed: (a: number) => number;
    readonly demo_rule_running: (a: number) => number;
    readonly demo_rule_step: (a: number) => [number, number];
    readonly demo_rule_steps: (a: number) => number;
    readonly demo_sample: (a: number, b: bigint, c: number, d: number) => [number, number, number, number];
    readonly demo_set_mode: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_width: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_drop_slice: (a: number, b: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
