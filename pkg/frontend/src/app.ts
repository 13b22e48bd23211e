// Wiring: webcam -> estimator -> frame messages over the WebSocket, and
// atlas replies -> canvas overlay. The client does no acupoint math; the
// engine is the single source of truth.

import { renderChannelPanel } from "./channelPanel.js";
import { Estimator, loadEstimator, selfCheck } from "./estimator.js";
import { SoftLimiter } from "./limiter.js";
import { drawOverlay, filterAtlas, hitTest, tooltipText, Viewport } from "./overlay.js";
import { frameMessage, helloMessage, parseServerMessage, selectMessage } from "./protocol.js";
import * as st from "./state.js";

const RECONNECT_DELAY_MS = 1500;

export class App {
  private state = st.initialState();
  private ws: WebSocket | null = null;
  private estimator: Estimator | null = null;
  private limiter = new SoftLimiter(1, 1000);
  private selfCheckDone = false;

  constructor(
    private video: HTMLVideoElement,
    private canvas: HTMLCanvasElement,
    private panel: HTMLElement,
    private statusBar: HTMLElement,
    private tooltip: HTMLElement
  ) {}

  async start(): Promise<void> {
    this.connect();
    this.canvas.addEventListener("pointerdown", (e) => this.onTap(e));
    const mirrorBox = document.getElementById("mirror") as HTMLInputElement | null;
    mirrorBox?.addEventListener("change", () => {
      this.state = st.setMirrored(this.state, mirrorBox.checked);
    });

    try {
      const stream = await navigator.mediaDevices.getUserMedia({
        video: { width: 640, height: 480, facingMode: "user" },
      });
      this.video.srcObject = stream;
      await this.video.play();
    } catch (err) {
      this.statusBar.textContent = `camera denied: ${err}`;
      return;
    }

    this.statusBar.textContent = "loading face-mesh estimator...";
    try {
      this.estimator = await loadEstimator();
    } catch (err) {
      this.statusBar.textContent = `estimator failed to load: ${err}`;
      return;
    }

    requestAnimationFrame((t) => this.tick(t));
  }

  private connect(): void {
    const proto = location.protocol === "https:" ? "wss" : "ws";
    const ws = new WebSocket(`${proto}://${location.host}/ws`);
    this.ws = ws;
    this.state = st.onConnection(this.state, "connecting");
    ws.addEventListener("open", () => {
      this.state = st.onConnection(this.state, "open");
      ws.send(helloMessage());
    });
    ws.addEventListener("message", (e) => {
      const msg = parseServerMessage(String(e.data));
      if (!msg) return;
      if (msg.type === "atlas" || msg.type === "dropped") this.limiter.onReply(performance.now());
      this.state = st.onServerMessage(this.state, msg, performance.now());
      if (msg.type === "config") this.renderPanel();
    });
    ws.addEventListener("close", () => {
      this.state = st.onConnection(this.state, "closed");
      setTimeout(() => this.connect(), RECONNECT_DELAY_MS);
    });
  }

  private renderPanel(): void {
    if (!this.state.config) return;
    renderChannelPanel(this.panel, this.state.config, this.state.selected, (code) => {
      this.state = st.toggleChannel(this.state, code);
      this.ws?.send(selectMessage(this.state.selected));
      this.renderPanel();
    });
  }

  private viewport(): Viewport {
    return {
      cssWidth: this.canvas.clientWidth,
      cssHeight: this.canvas.clientHeight,
      mirrored: this.state.mirrored,
    };
  }

  private onTap(e: PointerEvent): void {
    if (!this.state.atlas || this.state.atlas.degenerate) return;
    const rect = this.canvas.getBoundingClientRect();
    const shown = filterAtlas(this.state.atlas, this.state.selected);
    const hit = hitTest(shown.points, e.clientX - rect.left, e.clientY - rect.top, this.viewport());
    this.state = st.setHighlight(this.state, hit ? hit.id : null);
    if (hit) {
      this.tooltip.textContent = tooltipText(hit, st.regionOf(this.state, hit.id));
      this.tooltip.style.display = "block";
      this.tooltip.style.left = `${e.clientX - rect.left + 12}px`;
      this.tooltip.style.top = `${e.clientY - rect.top - 12}px`;
    } else {
      this.tooltip.style.display = "none";
    }
  }

  private tick(tMs: number): void {
    this.sendFrame(tMs);
    this.render();
    requestAnimationFrame((t) => this.tick(t));
  }

  private sendFrame(tMs: number): void {
    if (!this.estimator || !this.ws || this.ws.readyState !== WebSocket.OPEN) return;
    if (this.video.readyState < 2) return;

    const vertices = this.estimator.detect(this.video, tMs);
    if (!this.selfCheckDone && vertices) {
      const problem = selfCheck(vertices);
      if (problem) {
        this.statusBar.textContent = `estimator mismatch: ${problem}`;
        return;
      }
      this.selfCheckDone = true;
    }
    this.state = st.onEstimator(this.state, vertices !== null);
    if (!vertices) return;
    if (!this.limiter.trySend(performance.now())) return;

    const w = this.video.videoWidth;
    const h = this.video.videoHeight;
    const ts = Math.round(tMs * 1000); // microseconds, strictly increasing
    this.ws.send(frameMessage(ts, w, h, vertices));
    this.state = st.onFrameSent(this.state, w, h);
  }

  private render(): void {
    const view = this.viewport();
    if (this.canvas.width !== view.cssWidth) this.canvas.width = view.cssWidth;
    if (this.canvas.height !== view.cssHeight) this.canvas.height = view.cssHeight;
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;

    this.video.style.transform = this.state.mirrored ? "scaleX(-1)" : "none";

    const atlas = this.state.atlas;
    if (!atlas || atlas.degenerate || this.state.noFace || !this.state.frameSize) {
      ctx.clearRect(0, 0, view.cssWidth, view.cssHeight);
    } else {
      const colors = new Map(
        (this.state.config?.channels ?? []).map((c) => [c.code, c.color])
      );
      drawOverlay(ctx, filterAtlas(atlas, this.state.selected), {
        view,
        frame: this.state.frameSize,
        colors,
        highlightId: this.state.highlightId,
      });
    }

    const parts = [
      `${this.state.fps.toFixed(1)} fps`,
      `drops ${(st.dropRate(this.state) * 100).toFixed(0)}%`,
      ...st.badges(this.state),
    ];
    this.statusBar.textContent = parts.join("  ·  ");
  }
}
