/** Pinned /v1 payload fixtures the mocked service serves. These mirror the
 * service's JSON schemas; the contract tests assert the screens render
 * exactly these values. */

import type {
  CompareResponse,
  EncoderResult,
  IdentifyResponse,
  QualityRecord,
} from "../src/types";

export const IMAGE_A = "aaaa1111bbbb2222";
export const IMAGE_B = "cccc3333dddd4444";

export const QUALITY_A: QualityRecord = {
  USABLE_IRIS_AREA: 97.25,
  IRIS_SCLERA_CONTRAST: 31.4159,
  GRAY_SCALE_UTILIZATION: 6.91,
  IRIS_RADIUS: 140.0,
  PUPIL_IRIS_RATIO: 0.3214285714285714,
  IRIS_PUPIL_CONCENTRICITY: 1.0,
  SHARPNESS: 88.05,
};

export const QUALITY_B: QualityRecord = {
  ...QUALITY_A,
  USABLE_IRIS_AREA: 74.5,
  SHARPNESS: 41.625,
};

export const ENCODER_RESULTS: Record<string, EncoderResult> = {
  gabor2d: {
    score: 0.0623372395833333,
    best_shift: -1,
    ftm: false,
    heatmap_url: "/v1/heatmap/b504a8936835bbf9/gabor2d",
  },
  loggabor1d: {
    score: 0.0200125,
    best_shift: -3,
    ftm: false,
    heatmap_url: "/v1/heatmap/b504a8936835bbf9/loggabor1d",
  },
  bif: {
    score: 0.0739341517857142,
    best_shift: -3,
    ftm: false,
    heatmap_url: "/v1/heatmap/b504a8936835bbf9/bif",
  },
};

export function compareResponse(encoders: string[]): CompareResponse {
  const results: CompareResponse["results"] = {};
  for (const encoder of encoders) {
    results[encoder as keyof CompareResponse["results"]] =
      ENCODER_RESULTS[encoder];
  }
  return {
    comparison_id: "b504a8936835bbf9",
    image_id_a: IMAGE_A,
    image_id_b: IMAGE_B,
    results,
    quality_a: QUALITY_A,
    quality_b: QUALITY_B,
  };
}

export const IDENTIFY_RESPONSE: IdentifyResponse = {
  image_id: IMAGE_A,
  encoder: "bif",
  ftm: false,
  candidates: [
    { sample_id: "S001-L-2", subject_id: "S001", eye: "left", score: 0.0, best_shift: 0 },
    { sample_id: "S001-L-3", subject_id: "S001", eye: "left", score: 0.085, best_shift: 2 },
    { sample_id: "S001-L-1", subject_id: "S001", eye: "left", score: 0.094, best_shift: -1 },
    { sample_id: "S000-L-1", subject_id: "S000", eye: "left", score: 0.452, best_shift: 9 },
  ],
  skipped: 1,
};
