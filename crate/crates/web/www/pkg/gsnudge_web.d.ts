/* tslint:disable */
/* eslint-disable */

/**
 * Reference and nudged trajectories from the labyrinth seeds.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Advances both trajectories by `n` steps.
     */
    advance(n: number): void;
    /**
     * `schedule` is `from-start`, `delayed:<t>` or `periodic:<on>:<off>`.
     */
    constructor(fine_nx: number, coarse_nx: number, mu_v: number, schedule: string, dt: number);
    nudging_active(): boolean;
    /**
     * Observation of the current reference `v` at another coarse size.
     */
    observe_preview(coarse_nx: number): Uint8Array;
    rel_err_u(): number;
    rel_err_v(): number;
    /**
     * RGBA pixels (`side² · 4` bytes) of the requested view.
     */
    render(view: View): Uint8Array;
    side(): number;
    time(): number;
}

/**
 * Which field [`Demo::render`] draws.
 */
export enum View {
    TruthV = 0,
    NudgedV = 1,
    ObservedV = 2,
    ErrorV = 3,
}

/**
 * Text report of the sufficient synchronization conditions.
 */
export function check_conditions(d_u: number, d_v: number, feed: number, kill: number, mu_u: number, mu_v: number, dt: number, coarse_nx: number, v_max: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly check_conditions: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number];
    readonly demo_advance: (a: number, b: number) => [number, number];
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly demo_nudging_active: (a: number) => number;
    readonly demo_observe_preview: (a: number, b: number) => [number, number, number, number];
    readonly demo_rel_err_u: (a: number) => number;
    readonly demo_rel_err_v: (a: number) => number;
    readonly demo_render: (a: number, b: number) => [number, number];
    readonly demo_side: (a: number) => number;
    readonly demo_time: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
