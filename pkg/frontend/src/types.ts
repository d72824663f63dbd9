/** /v1 payload shapes. The UI renders these verbatim; it never derives or
 * recomputes metric values on its own. */

export type EncoderId = "gabor2d" | "loggabor1d" | "bif";

export const ENCODERS: EncoderId[] = ["gabor2d", "loggabor1d", "bif"];

export interface UploadResponse {
  image_id: string;
  width: number;
  height: number;
}

export interface EncoderResult {
  score: number | null;
  best_shift: number | null;
  ftm: boolean;
  heatmap_url: string | null;
}

export interface QualityRecord {
  USABLE_IRIS_AREA: number | null;
  IRIS_SCLERA_CONTRAST: number | null;
  GRAY_SCALE_UTILIZATION: number | null;
  IRIS_RADIUS: number | null;
  PUPIL_IRIS_RATIO: number | null;
  IRIS_PUPIL_CONCENTRICITY: number | null;
  SHARPNESS: number | null;
}

export interface CompareResponse {
  comparison_id: string;
  image_id_a: string;
  image_id_b: string;
  results: Partial<Record<EncoderId, EncoderResult>>;
  quality_a: QualityRecord | null;
  quality_b: QualityRecord | null;
}

export interface Candidate {
  sample_id: string;
  subject_id: string;
  eye: string;
  score: number;
  best_shift: number;
}

export interface IdentifyResponse {
  image_id: string;
  encoder: EncoderId;
  ftm: boolean;
  reason?: string;
  candidates: Candidate[];
  skipped: number;
}

export interface ApiError {
  error_code: string;
  message: string;
}

/** Display ranges for the quality panel bars (rendering hints only; the
 * numbers shown are always the raw service values). */
export const QUALITY_RANGES: Record<keyof QualityRecord, [number, number]> = {
  USABLE_IRIS_AREA: [0, 100],
  IRIS_SCLERA_CONTRAST: [0, 100],
  GRAY_SCALE_UTILIZATION: [0, 8],
  IRIS_RADIUS: [0, 320],
  PUPIL_IRIS_RATIO: [0, 1],
  IRIS_PUPIL_CONCENTRICITY: [0, 1],
  SHARPNESS: [0, 100],
};

export const QUALITY_KEYS = Object.keys(QUALITY_RANGES) as (keyof QualityRecord)[];
