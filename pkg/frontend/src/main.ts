import { App } from "./app.js";

function mustGet<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const app = new App(
  mustGet<HTMLVideoElement>("video"),
  mustGet<HTMLCanvasElement>("overlay"),
  mustGet("channels"),
  mustGet("status"),
  mustGet("tooltip")
);

app.start();
