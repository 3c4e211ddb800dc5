/** Hash-routed entry point: #/annotate/<task>/<annotator>, #/curate/<task>,
 * #/pool, #/dashboard. The app is a pure client of the /v1 API. */

import { ApiClient } from "./api.js";
import { AnnotateView } from "./views/annotate.js";
import { CurateView } from "./views/curate.js";
import { DashboardView } from "./views/dashboard.js";
import { PoolView } from "./views/pool.js";

const api = new ApiClient("");

function mount(): HTMLElement {
  const root = document.getElementById("view");
  if (!root) throw new Error("missing #view container");
  return root;
}

async function route(): Promise<void> {
  const root = mount();
  const [, path = "pool", arg1 = "", arg2 = ""] = window.location.hash.split("/");
  try {
    if (path === "annotate" && arg1) {
      await new AnnotateView(api, root, arg1, arg2 || "annotator").load();
    } else if (path === "curate" && arg1) {
      await new CurateView(api, root, arg1).load();
    } else if (path === "dashboard") {
      await new DashboardView(api, root).load();
    } else {
      await new PoolView(api, root).load();
    }
  } catch (error) {
    root.innerHTML = `<p class="error">${(error as Error).message}</p>`;
  }
}

window.addEventListener("hashchange", () => void route());
window.addEventListener("DOMContentLoaded", () => void route());
