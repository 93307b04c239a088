/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_flowdemo_free: (a: number, b: number) => void;
export const __wbg_table_free: (a: number, b: number) => void;
export const flow_profile: (a: number, b: number, c: number) => [number, number, number];
export const flowdemo_history: (a: number) => number;
export const flowdemo_profile: (a: number) => number;
export const flowdemo_status: (a: number) => [number, number];
export const gauge_curve: (a: number, b: number) => [number, number, number];
export const glue_demo: (a: number, b: number, c: number, d: number) => [number, number, number];
export const table_cols: (a: number) => number;
export const table_data: (a: number) => [number, number];
export const table_rows: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
