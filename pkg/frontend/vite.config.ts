import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    port: 5173,
    proxy: {
      // the backend: `tracelens serve --store ... --port 8077`
      "/api": "http://127.0.0.1:8077",
    },
  },
  preview: {
    port: 4173,
    proxy: {
      "/api": "http://127.0.0.1:8077",
    },
  },
  test: {
    environment: "jsdom",
  },
});
