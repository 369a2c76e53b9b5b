/** Browser entry point: boot the app once the shell document is parsed. */

import { boot } from "./app.js";

boot();
