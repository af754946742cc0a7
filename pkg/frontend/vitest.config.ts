import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    environmentOptions: {
      happyDOM: {
        // integration tests talk to the real service on another port
        settings: { fetch: { disableSameOriginPolicy: true } },
      },
    },
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
