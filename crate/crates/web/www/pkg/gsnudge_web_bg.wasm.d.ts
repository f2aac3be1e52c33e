/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const check_conditions: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number];
export const demo_advance: (a: number, b: number) => [number, number];
export const demo_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const demo_nudging_active: (a: number) => number;
export const demo_observe_preview: (a: number, b: number) => [number, number, number, number];
export const demo_rel_err_u: (a: number) => number;
export const demo_rel_err_v: (a: number) => number;
export const demo_render: (a: number, b: number) => [number, number];
export const demo_side: (a: number) => number;
export const demo_time: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
