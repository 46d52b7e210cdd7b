import { ProofApi } from "./api.js";
import { ProofApp } from "./app.js";

// The only configuration knob: <meta name="api-base" content="http://..."> .
// Absent or empty means same origin, the normal case when served from /ui.
function apiBase(): string {
  const meta = document.querySelector('meta[name="api-base"]');
  const content = meta?.getAttribute("content") ?? "";
  return content.replace(/\/$/, "");
}

document.addEventListener("DOMContentLoaded", () => {
  const mount = document.getElementById("app");
  if (!mount) throw new Error("missing #app mount point");
  new ProofApp(new ProofApi(apiBase()), mount);
});
