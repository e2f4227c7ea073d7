/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_machinedemo_free: (a: number, b: number) => void;
export const curves: (a: number, b: number, c: number) => [number, number, number, number];
export const hand: (a: number, b: number, c: number) => [number, number, number, number];
export const machinedemo_new: () => number;
export const machinedemo_reset: (a: number) => void;
export const machinedemo_snapshot: (a: number) => [number, number];
export const machinedemo_step: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const select_topology: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const topologies: () => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
