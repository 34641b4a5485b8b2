/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    bestYaw(): number;
    edgePixels(): number;
    /**
     * Binarizes at `threshold` and returns the edge window.
     */
    edgesRgba(threshold: number): Uint8Array;
    height(): number;
    constructor(seed: number, yaw: number, speckle: number);
    overlayRgba(yaw: number): Uint8Array;
    photoRgba(): Uint8Array;
    scoreAt(yaw: number): number;
    /**
     * Flattened `[yaw, score, yaw, score, …]` over the default grid.
     */
    sweep(): Float64Array;
    trueYaw(): number;
    width(): number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_bestYaw: (a: number) => [number, number, number];
    readonly demo_edgePixels: (a: number) => number;
    readonly demo_edgesRgba: (a: number, b: number) => [number, number, number, number];
    readonly demo_height: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: number) => [number, number, number];
    readonly demo_overlayRgba: (a: number, b: number) => [number, number, number, number];
    readonly demo_photoRgba: (a: number) => [number, number];
    readonly demo_scoreAt: (a: number, b: number) => [number, number, number];
    readonly demo_sweep: (a: number) => [number, number, number, number];
    readonly demo_trueYaw: (a: number) => number;
    readonly demo_width: (a: number) => number;
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
