/* tslint:disable */
/* eslint-disable */

/**
 * Resolvent norm at `points` frequencies on the imaginary axis, plus the
 * refined supremum.
 */
export function resolvent_curve(k1: number, k3: number, reynolds: number, n2: number, norm: string, points: number): string;

/**
 * Supremum of the resolvent norm for each Reynolds number and the fitted
 * log-log slope.
 */
export function scaling(k1: number, k3: number, n2: number, norm: string, reynolds: Float64Array): string;

/**
 * Eigenvalues of the linear operator at one wavenumber pair.
 */
export function spectrum(k1: number, k3: number, reynolds: number, n2: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly resolvent_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly scaling: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly spectrum: (a: number, b: number, c: number, d: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
