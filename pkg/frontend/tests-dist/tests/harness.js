/** Live-server fixture and toy data for UI tests. */
import { spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import net from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
const SERVER_BOOT = `
import sys, uvicorn
from taskforge.server import create_app
uvicorn.run(create_app(sys.argv[1], seed=5), host="127.0.0.1", port=int(sys.argv[2]), log_level="warning")
`;
function freePort() {
    return new Promise((resolve, reject) => {
        const probe = net.createServer();
        probe.once("error", reject);
        probe.listen(0, "127.0.0.1", () => {
            const port = probe.address().port;
            probe.close(() => resolve(port));
        });
    });
}
async function waitUntilReady(url, child) {
    const deadline = Date.now() + 30000;
    let lastError = null;
    while (Date.now() < deadline) {
        if (child.exitCode !== null) {
            throw new Error(`server exited early with code ${child.exitCode}`);
        }
        try {
            const response = await fetch(`${url}/projects/__probe__/tasks`);
            if (response.status === 404)
                return;
        }
        catch (error) {
            lastError = error;
        }
        await sleep(150);
    }
    throw new Error(`server never became ready: ${String(lastError)}`);
}
export async function startServer() {
    const dataDir = mkdtempSync(join(tmpdir(), "taskforge-ui-"));
    const port = await freePort();
    const url = `http://127.0.0.1:${port}`;
    const child = spawn("python3", ["-c", SERVER_BOOT, dataDir, String(port)], {
        stdio: ["ignore", "inherit", "inherit"],
    });
    await waitUntilReady(url, child);
    return {
        url,
        dataDir,
        stop: () => new Promise((resolve) => {
            child.once("exit", () => {
                rmSync(dataDir, { recursive: true, force: true });
                resolve();
            });
            child.kill("SIGTERM");
            setTimeout(() => child.kill("SIGKILL"), 3000).unref();
        }),
    };
}
export const FLIGHT_SCHEMA = {
    name: "flight",
    time: "ts",
    entity: ["flight_number", "airline"],
    categorical: ["is_delayed"],
    numerical: [],
};
/** Deterministic PRNG so the generated table is identical across runs. */
function mulberry32(seed) {
    let a = seed >>> 0;
    return () => {
        a += 0x6d2b79f5;
        let t = a;
        t = Math.imul(t ^ (t >>> 15), t | 1);
        t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
        return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    };
}
export function flightCsv() {
    const rng = mulberry32(42);
    const airlines = ["AA", "DL", "UA"];
    const lines = ["ts,flight_number,airline,is_delayed"];
    for (let day = 1; day <= 31; day++) {
        for (let hour = 0; hour < 24; hour += 2) {
            const airline = airlines[Math.floor(rng() * airlines.length)];
            const flight = `F${1 + Math.floor(rng() * 39)}`;
            const delayed = rng() < 0.4 ? "1" : "0";
            const dd = String(day).padStart(2, "0");
            const hh = String(hour).padStart(2, "0");
            lines.push(`2015-01-${dd} ${hh}:00:00,${flight},${airline},${delayed}`);
        }
    }
    return lines.join("\n") + "\n";
}
export function sleep(ms) {
    return new Promise((resolve) => setTimeout(resolve, ms));
}
export async function waitFor(check, what, timeoutMs = 10000) {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
        if (check())
            return;
        await sleep(25);
    }
    throw new Error(`timed out waiting for ${what}`);
}
