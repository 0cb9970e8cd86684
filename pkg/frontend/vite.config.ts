import { defineConfig } from "vite";

export default defineConfig({
  build: {
    outDir: "dist",
    emptyOutDir: true,
  },
  server: {
    port: 5173,
    proxy: {
      // the review service owns /sessions; same origin in production
      "/sessions": {
        target: "http://127.0.0.1:8000",
        changeOrigin: true,
      },
    },
  },
});
