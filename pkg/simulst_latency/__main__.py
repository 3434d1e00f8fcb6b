"""
The `python -m simulst_latency` entrypoint.
"""

if __name__ == "__main__":  # pragma: no cover
    from simulst_latency._cli import main

    main()
