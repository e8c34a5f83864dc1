/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demotrainer_free: (a: number, b: number) => void;
export const __wbg_rgba_free: (a: number, b: number) => void;
export const demotrainer_bicubicPsnr: (a: number) => [number, number, number];
export const demotrainer_iteration: (a: number) => number;
export const demotrainer_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const demotrainer_paramCount: (a: number) => number;
export const demotrainer_psnr: (a: number) => [number, number, number];
export const demotrainer_sparsityImage: (a: number, b: number) => [number, number, number];
export const demotrainer_step: (a: number, b: number) => [number, number, number];
export const demotrainer_upscalePreview: (a: number) => [number, number, number];
export const resample_rgba: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const rgba_data: (a: number) => [number, number];
export const rgba_height: (a: number) => number;
export const rgba_width: (a: number) => number;
export const __wbindgen_export_0: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
