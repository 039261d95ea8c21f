import { boot } from "./app.js";

const root = document.getElementById("app");
if (root) {
  boot(root).catch((err) => {
    root.textContent = `failed to reach the model service: ${err}`;
  });
}
