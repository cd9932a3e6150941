import { defineConfig } from "vite";

// `npm run dev` proxies API calls to a locally running tutor service
// (`metaplan tutor serve --port 8000`).
export default defineConfig({
  server: {
    proxy: {
      "/sessions": "http://127.0.0.1:8000",
      "/demos": "http://127.0.0.1:8000",
    },
  },
});
