"""Lane scaling and batching under the first-order cycle model.

Tabulates cycle counts for the attention-shaped softmax workload (785-element
rows) and a transformer-width layernorm (768 channels), serial versus
ping-pong, across lane counts -- the quick way to see where the fill/drain
overhead stops mattering.

Run: python3 demos/cycle_model.py
"""

from sole.pipemodel import PipeConfig, cycles_layernorm, cycles_softmax


def table(kind: str, count, n: int, rows: int) -> None:
    print(f"\n{kind}: n={n}, rows={rows}")
    print(f"{'lanes':>6} {'serial':>8} {'ping-pong':>10} {'speedup':>8} {'cyc/row':>8}")
    for lanes in (8, 16, 32, 64, 128):
        ser = count(n, rows, PipeConfig(vector_lanes=lanes, pingpong=False))
        pp = count(n, rows, PipeConfig(vector_lanes=lanes, pingpong=True))
        print(f"{lanes:>6} {ser:>8} {pp:>10} {ser / pp:>8.2f} {pp / rows:>8.1f}")


def main() -> None:
    print("cycle counts: two-stage pipelines, fixed unit stage latencies")
    table("softmax", cycles_softmax, n=785, rows=16)
    table("layernorm", cycles_layernorm, n=768, rows=16)

    print("\nbatch amortization at 32 lanes (softmax, n=785):")
    for rows in (1, 2, 4, 16, 64):
        pp = cycles_softmax(785, rows)
        print(f"  rows={rows:<3} {pp:>6} cycles  ({pp / rows:.1f}/row)")
    print("ping-pong converges to one beat-group per row; serial pays two.")


if __name__ == "__main__":
    main()
