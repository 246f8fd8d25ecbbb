import { ApiClient } from "./api";
import { App } from "./app";

const host = document.getElementById("app");
if (host) {
  const app = new App(host, new ApiClient(), {
    query: window.location.search.replace(/^\?/, ""),
    onUrlChange: (query) =>
      window.history.replaceState(null, "", query ? `?${query}` : window.location.pathname),
  });
  void app.init();
}
