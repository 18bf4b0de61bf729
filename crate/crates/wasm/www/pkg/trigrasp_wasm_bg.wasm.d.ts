/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_peakdemo_free: (a: number, b: number) => void;
export const compareOffset: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
export const peakdemo_heatmap: (a: number) => [number, number];
export const peakdemo_new: (a: number, b: number, c: number) => number;
export const peakdemo_peaks: (a: number, b: number, c: number, d: number) => [number, number];
export const renderLabels: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
