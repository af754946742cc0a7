import { WeatClient } from "./api";
import { createApp } from "./app";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app element");
}
const app = createApp(root, new WeatClient(""));
void app.start();
