/* tslint:disable */
/* eslint-disable */

/**
 * Result of [`flow_profile`].
 */
export class FlowDemo {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    history(): Table;
    profile(): Table;
    status(): string;
}

/**
 * A table of `f64`, stored row by row.
 */
export class Table {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    cols(): number;
    data(): Float64Array;
    rows(): number;
}

/**
 * Flows ω₀ = 3 + `p1` cos θ + `p2` P₂(cos θ) towards the horizon r = 2.
 */
export function flow_profile(n_theta: number, p1: number, p2: number): FlowDemo;

/**
 * The constructed gauge on the cone r = 1 + λ, λ ∈ [0, 3], for a
 * constant initial value `v0`. Columns: λ, a, κ, s, min gauge slack.
 */
export function gauge_curve(mass: number, v0: number): Table;

/**
 * The flow chart v(λ) and its mollification v_ε across the junction
 * band [Λ − δ, Λ + δ] at the equator, for ω₀ = 3 + `p1` cos θ.
 * Columns: λ, v, v_ε, ∂v, ∂v_ε.
 */
export function glue_demo(p1: number, lambda_j: number, delta: number, eps: number): Table;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_flowdemo_free: (a: number, b: number) => void;
    readonly __wbg_table_free: (a: number, b: number) => void;
    readonly flow_profile: (a: number, b: number, c: number) => [number, number, number];
    readonly flowdemo_history: (a: number) => number;
    readonly flowdemo_profile: (a: number) => number;
    readonly flowdemo_status: (a: number) => [number, number];
    readonly gauge_curve: (a: number, b: number) => [number, number, number];
    readonly glue_demo: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly table_cols: (a: number) => number;
    readonly table_data: (a: number) => [number, number];
    readonly table_rows: (a: number) => number;
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
