/* tslint:disable */
/* eslint-disable */

export class PeakDemo {
    free(): void;
    [Symbol.dispose](): void;
    heatmap(): Uint8Array;
    constructor(seed: number, size: number, blobs: number);
    /**
     * `[x0, y0, x1, y1, x2, y2, score]` per peak, apex first.
     */
    peaks(threshold: number, radius: number, d: number): Float64Array;
}

/**
 * `[triangle_iou, rect_iou, correct, tri_a(6), tri_b(6), rect_a(8), rect_b(8)]`.
 */
export function compareOffset(cx: number, cy: number, omega: number, theta_deg: number, d: number, along: number, across: number, dtheta_deg: number): Float64Array;

export function renderLabels(seed: number, size: number, k: number, rotation_deg: number): Uint8Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_peakdemo_free: (a: number, b: number) => void;
    readonly compareOffset: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly peakdemo_heatmap: (a: number) => [number, number];
    readonly peakdemo_new: (a: number, b: number, c: number) => number;
    readonly peakdemo_peaks: (a: number, b: number, c: number, d: number) => [number, number];
    readonly renderLabels: (a: number, b: number, c: number, d: number) => [number, number, number, number];
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
