"""Run the adapter service: caption-adapter [--backend stub|real] [--port N].

The real backend loads its models in a background thread; the service
answers 503 until loading completes.
"""

from __future__ import annotations

import argparse
import os
import sys
import threading


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="caption-adapter", description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=int(os.environ.get("ADAPTER_PORT", "8077")))
    parser.add_argument("--backend", choices=("stub", "real"), default="stub")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-new-tokens", type=int, default=200)
    parser.add_argument("--temperature", type=float, default=0.0)
    args = parser.parse_args(argv)

    import uvicorn

    from .backends import RealBackend, StubBackend
    from .service import create_app

    if args.backend == "real":
        backend = RealBackend(
            device=args.device,
            max_new_tokens=args.max_new_tokens,
            temperature=args.temperature,
        )
        threading.Thread(target=backend.load, daemon=True).start()
    else:
        backend = StubBackend()

    uvicorn.run(create_app(backend), host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
