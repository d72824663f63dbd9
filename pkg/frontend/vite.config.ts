import { defineConfig } from "vitest/config";

export default defineConfig({
  build: {
    outDir: "dist",
    sourcemap: true,
  },
  server: {
    // during development, proxy API calls to a locally running service
    proxy: {
      "/v1": "http://127.0.0.1:8750",
    },
  },
  test: {
    environment: "jsdom",
    // the e2e spec needs a live service; e2e/run.mjs sets the base URL
    include: process.env.FORENSIRIS_E2E_BASE
      ? ["e2e/**/*.e2e.ts"]
      : ["tests/**/*.test.ts"],
  },
});
