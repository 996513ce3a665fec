"""
One complete compression round trip on a single source block.

Builds the seeded Gaussian dictionary, encodes a block by exhaustive
minimum-distance search, shows the index/bit serialization both ways,
reconstructs the block, and persists matrix and selection to files.
"""
import tempfile
from pathlib import Path

import numpy as np

from sparcomp import (
    beta_rank, beta_to_bits, bits_to_beta, build_design_matrix,
    encode_min_distance, load_beta, load_matrix, make_params, save_beta,
    save_matrix, synthesize,
)
from sparcomp.encoder import sample_power
from sparcomp.sim import SourceModel, draw_source


def main():
    params = make_params(12, 5, 16, 1.0, 0.5, seed=2024)
    print(f"codebook: L={params.L} sections x M={params.M} columns, "
          f"n={params.n}, rate {params.R:.4f} nats/sample "
          f"({params.L * 4} bits per block)")
    matrix = build_design_matrix(params)
    print(f"dictionary hash: {matrix.content_hash()[:16]}...\n")

    source = draw_source(SourceModel("gaussian_iid", 1.0), params.n, 5)
    print("source block power:", round(sample_power(source), 4))

    result = encode_min_distance(matrix, source)
    print("encode status:", result.status)
    print("selected columns per section:", result.beta.indices)
    print("distortion:", round(result.distortion, 4), "target D:", params.D)

    rank = beta_rank(result.beta, params.M)
    bits = beta_to_bits(result.beta, params.M)
    print(f"\ncodeword rank {rank} of {params.n_codewords}; bits: {bits}")
    assert bits_to_beta(bits, params) == result.beta

    reconstruction = synthesize(matrix, result.beta)
    err = sample_power(source - reconstruction)
    print("reconstruction error (per sample):", round(err, 6))

    with tempfile.TemporaryDirectory() as tmp:
        mpath, bpath = Path(tmp) / "dict.bin", Path(tmp) / "beta.bin"
        save_matrix(matrix, mpath)
        save_beta(result.beta, bpath)
        again = synthesize(load_matrix(mpath, params), load_beta(bpath))
        print("decode-from-files identical:",
              bool(np.array_equal(again, reconstruction)))


if __name__ == "__main__":
    main()
