import { TryonClient } from "./api.js";
import { TryonApp } from "./ui.js";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app root element");
}

const base = (window as unknown as { TRYON_API_BASE?: string }).TRYON_API_BASE
  ?? "http://localhost:8000";
const app = new TryonApp(root, new TryonClient(base));
app.render();
void app.loadCatalog();
