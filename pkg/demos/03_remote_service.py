"""Remote backend demo: serve the tabular regressor and query it over HTTP.

Starts the prediction microservice in a background thread on an ephemeral
port, checks /health, sends one /predict request by hand, then runs a full
in-context estimate through the pipeline with the remote backend. Requires
the service package: pip install -e service

Run from the repository root:

    python demos/03_remote_service.py
"""

import socket
import tempfile
import threading
import time

import requests
import uvicorn

from tabserve import ServiceConfig, create_app

from ticbench.bench import CorpusPipeline, timetic_scores
from ticbench.icl import PredictorConfig
from ticbench.metrics import evaluate_ranking
from ticbench.synth import generate_corpus

# --- start the service ------------------------------------------------------
with socket.socket() as s:
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
server = uvicorn.Server(uvicorn.Config(
    create_app(ServiceConfig(port=port)), host="127.0.0.1", port=port,
    log_level="error",
))
threading.Thread(target=server.run, daemon=True).start()
url = f"http://127.0.0.1:{port}"
while True:
    try:
        health = requests.get(f"{url}/health", timeout=1).json()
        break
    except requests.RequestException:
        time.sleep(0.05)
print(f"service up at {url}, backend = {health['backend']}")

# --- one raw wire-protocol request ------------------------------------------
body = {
    "context": {"X": [[0.0], [1.0], [2.0], [3.0]], "y": [0.0, 2.0, 4.0, 6.0]},
    "target": {"X": [[1.5]]},
}
resp = requests.post(f"{url}/predict", json=body, timeout=5)
print(f"raw /predict for x=1.5 on y=2x context: {resp.json()['y'][0]:.3f}")

# --- the same endpoint driving the estimation pipeline ----------------------
with tempfile.TemporaryDirectory() as tmp:
    corpus_dir = f"{tmp}/corpus"
    print("generating a small corpus and scoring it via the remote backend...")
    generate_corpus(corpus_dir, seed=1, n_models=4, n_datasets=4,
                    noise=0.05, n_windows=60)
    pipeline = CorpusPipeline(corpus_dir=corpus_dir)
    predictor = PredictorConfig(backend="remote", endpoint_url=url)
    scores = timetic_scores(pipeline, "short", predictor=predictor)
    report = evaluate_ranking(scores, pipeline.records, method="timetic")
    print(f"remote-backend ranking quality: mean tau_w = {report.mean_tau():.3f}")

server.should_exit = True
