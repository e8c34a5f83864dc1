/* tslint:disable */
/* eslint-disable */
/**
 * Resizes an RGBA image to `out_width` x `out_height`.
 */
export function resample_rgba(rgba: Uint8Array, width: number, height: number, out_width: number, out_height: number, method_name: string): Rgba;
/**
 * A toy network trained at scale 3 on crops of a single image.
 */
export class DemoTrainer {
  free(): void;
  [Symbol.dispose](): void;
  /**
   * Channel-by-layer grid of nonzero ratios.
   */
  sparsityImage(cell: number): Rgba;
  bicubicPsnr(): number;
  /**
   * The downscaled image upscaled by the current network.
   */
  upscalePreview(): Rgba;
  /**
   * `kind` is an activation name such as `relu`, `mu` or `mu-d`.
   */
  constructor(kind: string, width: number, rgba: Uint8Array, img_width: number, img_height: number, seed: number);
  /**
   * Luma PSNR of the network on the whole training image.
   */
  psnr(): number;
  /**
   * Runs `n` iterations and returns their mean loss.
   */
  step(n: number): number;
  readonly paramCount: number;
  readonly iteration: number;
}
/**
 * 8-bit RGBA pixels, row-major.
 */
export class Rgba {
  private constructor();
  free(): void;
  [Symbol.dispose](): void;
  readonly data: Uint8Array;
  readonly width: number;
  readonly height: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
  readonly memory: WebAssembly.Memory;
  readonly __wbg_demotrainer_free: (a: number, b: number) => void;
  readonly __wbg_rgba_free: (a: number, b: number) => void;
  readonly demotrainer_bicubicPsnr: (a: number) => [number, number, number];
  readonly demotrainer_iteration: (a: number) => number;
  readonly demotrainer_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
  readonly demotrainer_paramCount: (a: number) => number;
  readonly demotrainer_psnr: (a: number) => [number, number, number];
  readonly demotrainer_sparsityImage: (a: number, b: number) => [number, number, number];
  readonly demotrainer_step: (a: number, b: number) => [number, number, number];
  readonly demotrainer_upscalePreview: (a: number) => [number, number, number];
  readonly resample_rgba: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
  readonly rgba_data: (a: number) => [number, number];
  readonly rgba_height: (a: number) => number;
  readonly rgba_width: (a: number) => number;
  readonly __wbindgen_export_0: WebAssembly.Table;
  readonly __wbindgen_malloc: (a: number, b: number) => number;
  readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
