// Checkbox panel built from the server config. Toggling a box updates the
// local selection (the overlay filters immediately) and notifies the app,
// which sends the select message.

import { ConfigMessage } from "./protocol.js";

export function renderChannelPanel(
  container: HTMLElement,
  config: ConfigMessage,
  selected: string[],
  onToggle: (code: string) => void
): void {
  container.textContent = "";
  const title = document.createElement("div");
  title.className = "panel-title";
  title.textContent = selected.length === 0 ? "Channels (all)" : "Channels";
  container.appendChild(title);

  for (const channel of config.channels) {
    const label = document.createElement("label");
    label.className = "channel-row";

    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = selected.length === 0 || selected.includes(channel.code);
    box.addEventListener("change", () => onToggle(channel.code));

    const swatch = document.createElement("span");
    swatch.className = "swatch";
    swatch.style.backgroundColor = channel.color;

    const text = document.createElement("span");
    text.textContent = `${channel.code} · ${channel.display_name}`;

    label.append(box, swatch, text);
    container.appendChild(label);
  }
}
