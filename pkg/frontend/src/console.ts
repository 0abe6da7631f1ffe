import { ApiClient } from "./api.js";
import { RatedPoster } from "./debounce.js";
import { ViewModel, type ThresholdEdit } from "./model.js";
import { renderScene, type Canvas2D } from "./render.js";
import type { ColorClassRecord, Rgb, SceneState } from "./types.js";

const CHANNELS = ["R", "G", "B"] as const;

/** Mount the operator console into `root` and start following the service.
 * Returns a handle that tears everything down. */
export function mountConsole(
  root: HTMLElement,
  serviceUrl: string,
): { dispose(): void } {
  const api = new ApiClient(serviceUrl);
  const model = new ViewModel(api);

  const status = document.createElement("div");
  status.className = "status";
  const platformSelect = document.createElement("select");
  const alerts = document.createElement("div");
  alerts.className = "alerts";
  const canvas = document.createElement("canvas");
  const sliders = document.createElement("div");
  sliders.className = "sliders";
  root.append(status, platformSelect, canvas, alerts, sliders);

  let image: ImageBitmap | undefined;
  let imageSeq = -1;
  let scale = 1;

  function redraw(): void {
    const state = model.latest;
    status.textContent = `${model.status} | frame ${state?.frame_seq ?? "-"}`;
    if (!state) return;
    scale = Math.min(1, (root.clientWidth || state.frame.width) / state.frame.width);
    canvas.width = Math.round(state.frame.width * scale);
    canvas.height = Math.round(state.frame.height * scale);
    const ctx = canvas.getContext("2d") as unknown as Canvas2D | null;
    if (!ctx) return;
    renderScene(ctx, state, {
      image,
      scale,
      goalMarkers: model.goalMarkers(),
      selected: model.selectedPlatform,
    });
    const noRoute = Object.values(state.platforms)
      .filter((p) => p.warnings.includes("no_route"))
      .map((p) => p.platform_id);
    alerts.textContent = noRoute.length ? `NoRoute: ${noRoute.join(", ")}` : "";
  }

  async function refreshImage(state: SceneState): Promise<void> {
    // the annotated pixmap is fetched on demand; overlays are vector data
    if (state.frame_seq === imageSeq) return;
    imageSeq = state.frame_seq;
    try {
      const res = await fetch(api.annotatedFrameUrl(state.frame_seq));
      if (!res.ok) return;
      image = await createImageBitmap(await res.blob());
      redraw();
    } catch {
      // keep the previous image; overlays still track the live state
    }
  }

  function syncPlatformOptions(state: SceneState): void {
    const ids = Object.keys(state.platforms).sort();
    if (ids.join() === [...platformSelect.options].map((o) => o.value).join()) return;
    platformSelect.replaceChildren(
      ...ids.map((id) => new Option(id, id, false, id === model.selectedPlatform)),
    );
  }

  platformSelect.addEventListener("change", () => {
    model.selectPlatform(platformSelect.value);
    redraw();
  });

  canvas.addEventListener("click", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const x = (ev.clientX - rect.left) / scale;
    const y = (ev.clientY - rect.top) / scale;
    void model.clickToGoal(Math.round(x), Math.round(y)).then(redraw);
  });

  const posters: RatedPoster<ThresholdEdit>[] = [];

  function sliderRow(cls: ColorClassRecord): HTMLElement {
    const row = document.createElement("fieldset");
    const label = cls.platform_id ? `${cls.role} ${cls.platform_id}` : cls.role;
    row.append(Object.assign(document.createElement("legend"), { textContent: label }));
    const lo = [...cls.lo] as Rgb;
    const hi = [...cls.hi] as Rgb;
    const poster = new RatedPoster<ThresholdEdit>((edit) => {
      void model.postThreshold(edit).catch(() => undefined);
    });
    posters.push(poster);
    const push = () => {
      const edit: ThresholdEdit = {
        role: cls.role,
        platformId: cls.platform_id,
        lo: [...lo] as Rgb,
        hi: [...hi] as Rgb,
      };
      model.stageThreshold(edit);
      poster.push(edit);
    };
    (["lo", "hi"] as const).forEach((end) => {
      const values = end === "lo" ? lo : hi;
      CHANNELS.forEach((name, ch) => {
        const input = document.createElement("input");
        input.type = "range";
        input.min = "0";
        input.max = "255";
        input.value = String(values[ch]);
        input.title = `${label} ${end} ${name}`;
        input.addEventListener("input", () => {
          values[ch] = Number(input.value);
          push();
        });
        row.append(input);
      });
    });
    return row;
  }

  void api.getConfig().then((config) => {
    sliders.replaceChildren(...config.classes.map(sliderRow));
  });

  const socket = api.openEvents({
    onState(state) {
      if (!model.ingest(state)) return; // stale push, keep the newer frame
      syncPlatformOptions(state);
      redraw();
      void refreshImage(state);
    },
    onStatus(connected) {
      model.setStatus(connected);
      redraw();
    },
  });

  return {
    dispose() {
      socket.close();
      posters.forEach((p) => p.dispose());
      root.replaceChildren();
    },
  };
}
