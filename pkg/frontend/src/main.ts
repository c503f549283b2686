import { SessionApi } from "./api";
import { GridView } from "./grid";
import { applyEvent, ClientModel, hydrate, initialModel } from "./model";
import { ControlPanel, StatusPanel, TeachPanel } from "./panels";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const existing = params.get("session");
  const api = existing
    ? new SessionApi(existing)
    : await SessionApi.create({ seed: Number(params.get("seed") ?? 0) });
  if (!existing) {
    params.set("session", api.sessionId);
    history.replaceState(null, "", `?${params}`);
  }

  const banner = document.getElementById("banner")!;
  const showError = (message: string) => {
    banner.textContent = message;
    banner.classList.add("visible", "error");
    window.setTimeout(() => banner.classList.remove("visible"), 4000);
  };

  let model: ClientModel = initialModel(await api.config());
  model = hydrate(
    model,
    await api.status(),
    await api.qtable(),
    await api.visits(),
    await api.trajectory(),
  );

  const statusPanel = new StatusPanel(document.getElementById("top")!);
  const grid = new GridView(document.getElementById("grid")!);
  const teachPanel = new TeachPanel(document.getElementById("right")!, api, showError);
  const controlPanel = new ControlPanel(
    document.getElementById("left")!,
    api,
    () => scheduleRender(),
    showError,
  );

  let dirty = true;
  function scheduleRender(): void {
    dirty = true;
  }
  function frame(): void {
    if (dirty) {
      dirty = false;
      statusPanel.render(model);
      controlPanel.render(model);
      teachPanel.render(model);
      grid.render(model, controlPanel.layers, controlPanel.slice);
    }
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);

  api.subscribe(
    (event) => {
      model = applyEvent(model, event);
      scheduleRender();
    },
    () => {
      banner.textContent = "event stream lost: data may be stale (reload to reconnect)";
      banner.classList.add("visible", "error");
    },
  );
}

boot().catch((err) => {
  const banner = document.getElementById("banner")!;
  banner.textContent = `failed to start: ${err.message}`;
  banner.classList.add("visible", "error");
});
