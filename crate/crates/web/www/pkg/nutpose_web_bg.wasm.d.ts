/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_bestYaw: (a: number) => [number, number, number];
export const demo_edgePixels: (a: number) => number;
export const demo_edgesRgba: (a: number, b: number) => [number, number, number, number];
export const demo_height: (a: number) => number;
export const demo_new: (a: number, b: number, c: number) => [number, number, number];
export const demo_overlayRgba: (a: number, b: number) => [number, number, number, number];
export const demo_photoRgba: (a: number) => [number, number];
export const demo_scoreAt: (a: number, b: number) => [number, number, number];
export const demo_sweep: (a: number) => [number, number, number, number];
export const demo_trueYaw: (a: number) => number;
export const demo_width: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
