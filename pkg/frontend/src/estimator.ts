// In-browser face-mesh estimation via the MediaPipe tasks-vision bundle,
// loaded from a CDN at runtime so the app ships no model code itself.

const WASM_BASE = "https://cdn.jsdelivr.net/npm/@mediapipe/tasks-vision@0.10.14/wasm";
const MODEL_URL =
  "https://storage.googleapis.com/mediapipe-models/face_landmarker/face_landmarker/float16/1/face_landmarker.task";
const CDN_MODULE = "https://cdn.jsdelivr.net/npm/@mediapipe/tasks-vision@0.10.14/+esm";

export const MESH_VERTEX_COUNT = 468;

export interface Estimator {
  detect(video: HTMLVideoElement, timestampMs: number): number[][] | null;
}

export async function loadEstimator(): Promise<Estimator> {
  const vision: any = await import(/* @vite-ignore */ CDN_MODULE);
  const fileset = await vision.FilesetResolver.forVisionTasks(WASM_BASE);
  const landmarker = await vision.FaceLandmarker.createFromOptions(fileset, {
    baseOptions: { modelAssetPath: MODEL_URL },
    runningMode: "VIDEO",
    numFaces: 1,
  });
  return {
    detect(video: HTMLVideoElement, timestampMs: number): number[][] | null {
      const result = landmarker.detectForVideo(video, timestampMs);
      const faces = result?.faceLandmarks;
      if (!faces || faces.length === 0) return null;
      return normalizeLandmarks(faces[0]);
    },
  };
}

/**
 * Map estimator output to the engine's 468 [x, y, z] triples. Newer
 * estimators append iris vertices past index 467; the engine's vertex
 * semantics cover the first 468, so extras are cut.
 */
export function normalizeLandmarks(
  landmarks: Array<{ x: number; y: number; z: number }>
): number[][] | null {
  if (landmarks.length < MESH_VERTEX_COUNT) return null;
  const out: number[][] = new Array(MESH_VERTEX_COUNT);
  for (let i = 0; i < MESH_VERTEX_COUNT; i++) {
    const p = landmarks[i];
    out[i] = [p.x, p.y, p.z];
  }
  return out;
}

/**
 * Startup sanity check on the first estimator result: the vertex count and
 * coordinate ranges must look like the 468-vertex convention the engine
 * expects. Index-level anatomy remains data-driven on the server side.
 */
export function selfCheck(vertices: number[][] | null): string | null {
  if (!vertices) return "estimator returned no face";
  if (vertices.length !== MESH_VERTEX_COUNT) {
    return `expected ${MESH_VERTEX_COUNT} vertices, got ${vertices.length}`;
  }
  for (const v of vertices) {
    if (!Number.isFinite(v[0]) || !Number.isFinite(v[1]) || !Number.isFinite(v[2])) {
      return "non-finite landmark coordinates";
    }
    if (v[0] < -0.5 || v[0] > 1.5 || v[1] < -0.5 || v[1] > 1.5) {
      return "landmark coordinates outside the normalized range";
    }
  }
  return null;
}
