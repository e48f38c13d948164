/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_fracture_count: (a: number) => number;
export const demo_initial: (a: number) => [number, number];
export const demo_materials: (a: number) => [number, number];
export const demo_new: (a: number) => [number, number, number];
export const demo_pf_damage: (a: number) => [number, number, number, number];
export const demo_pf_failed: (a: number) => number;
export const demo_pf_start: (a: number, b: number, c: number) => [number, number, number, number];
export const demo_pf_step: (a: number, b: number) => [number, number, number, number];
export const demo_pf_steps: (a: number) => number;
export const demo_pf_time_us: (a: number) => number;
export const demo_rule_failed: (a: number) => number;
export const demo_rule_running: (a: number) => number;
export const demo_rule_step: (a: number) => [number, number];
export const demo_rule_steps: (a: number) => number;
export const demo_sample: (a: number, b: bigint, c: number, d: number) => [number, number, number, number];
export const demo_set_mode: (a: number, b: number, c: number) => [number, number, number, number];
export const demo_width: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
