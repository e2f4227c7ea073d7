/* tslint:disable */
/* eslint-disable */

/**
 * Reward machine driven by hand-picked events.
 */
export class MachineDemo {
    free(): void;
    [Symbol.dispose](): void;
    constructor();
    reset(): void;
    /**
     * Current stage, total transition reward and the events allowed now.
     */
    snapshot(): string;
    /**
     * Steps with the named events set (comma separated, may be empty).
     */
    step(events: string, cone: boolean): string;
}

export function curves(mass: number, contacts: number, samples: number): string;

export function hand(topology: string, flexion: number): string;

export function select_topology(shape: string, size: number, mass: number, affordance: string): string;

export function topologies(): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_machinedemo_free: (a: number, b: number) => void;
    readonly curves: (a: number, b: number, c: number) => [number, number, number, number];
    readonly hand: (a: number, b: number, c: number) => [number, number, number, number];
    readonly machinedemo_new: () => number;
    readonly machinedemo_reset: (a: number) => void;
    readonly machinedemo_snapshot: (a: number) => [number, number];
    readonly machinedemo_step: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly select_topology: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly topologies: () => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
