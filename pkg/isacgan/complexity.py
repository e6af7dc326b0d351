# isacgan/complexity.py

"""
ISACGAN - Computational complexity

Closed-form real addition / multiplication counts of the trained SE-CGAN
and CE-CGAN, the matching instrumented counts taken from the batchnorm-
folded networks, the FFN benchmark counts and the reduction ratio.

Counting rules: a dense map in -> out costs out*(in + 1) additions and
in*out multiplications; a convolution costs (F_z + 1)*eta_F*F_n additions
and F_z*eta_F*F_n multiplications; activations, flatten and sigmoid are
free.
"""
from dataclasses import dataclass

from isacgan.baselines import FFN_HIDDEN, ffn_spec
from isacgan.cgan import (CE_FILTERS, CE_HIDDEN, CE_KERNEL, CE_STRIDE, SE_HIDDEN, ce_discriminator_spec,
                          ce_generator_spec, se_discriminator_spec, se_generator_spec)
from isacgan.errors import InvalidArgumentError, InvalidDimensionError, UnsupportedConfigurationError
from isacgan.neural_engine import count_operations, inference_spec

Counts = tuple[int, int]


def _add(a: Counts, b: Counts) -> Counts:
    return a[0] + b[0], a[1] + b[1]


# ==================================================================
# Closed forms
# ==================================================================

@dataclass(frozen=True)
class NetworkCounts:
    generator: Counts
    discriminator: Counts
    total: Counts


def conv_output_length(length: int, kernel: int, stride: int) -> int:
    """eta_F = floor((length - F_z) / F_s) + 1."""
    if stride < 1 or kernel < 1:
        raise InvalidArgumentError(f"kernel and stride must be >= 1 (F_z={kernel}, F_s={stride})")
    if kernel > length:
        raise UnsupportedConfigurationError(f"kernel {kernel} exceeds conv input length {length}")
    return (length - kernel) // stride + 1


def dense_network_counts(sizes) -> Counts:
    """Dense rule summed over consecutive layer sizes [in, h1, ..., out]."""
    sizes = list(sizes)
    if len(sizes) < 2 or min(sizes) < 1:
        raise InvalidDimensionError(f"need at least two positive layer sizes, got {sizes}")
    additions = sum(n_out * (n_in + 1) for n_in, n_out in zip(sizes, sizes[1:]))
    multiplications = sum(n_in * n_out for n_in, n_out in zip(sizes, sizes[1:]))
    return additions, multiplications


def se_counts(eta1: int, eta2: int, eta3: int, eta4: int) -> NetworkCounts:
    """
    Generator eta1 -> eta2 -> eta3 -> eta4, discriminator eta4 -> eta2 -> eta3 -> 1.
    The combined total uses k2 = 2(eta3 + 1) and k3 = 3 + eta4, which
    presumes eta1 = eta4 (true whenever P = M).
    """
    gen_products = eta1 * eta2 + eta2 * eta3 + eta3 * eta4
    generator = (gen_products + eta2 + eta3 + eta4, gen_products)
    disc_products = eta4 * eta2 + eta2 * eta3
    discriminator = (disc_products + eta2 + eta3 + (eta3 + 1), disc_products + eta3)

    k2 = 2 * (eta3 + 1)
    k3 = 3 + eta4
    total = (2 * eta1 * eta2 + k2 * eta2 + k3 * eta3 + eta4 + 1,
             2 * eta1 * eta2 + 2 * eta2 * eta3 + eta3 * (eta4 + 1))
    return NetworkCounts(generator=generator, discriminator=discriminator, total=total)


def complexity_se(M: int, eta2: int = SE_HIDDEN[0], eta3: int = SE_HIDDEN[1]) -> NetworkCounts:
    """SE-CGAN counts with eta1 = 2MP (P = M) and eta4 = 2M^2."""
    if M < 1:
        raise InvalidDimensionError(f"M must be >= 1, got {M}")
    return se_counts(2 * M * M, eta2, eta3, 2 * M * M)


def complexity_ce(C: int, P: int, M: int, N: int, F_z: int = CE_KERNEL, F_n: int = CE_FILTERS,
                  F_s: int = CE_STRIDE, eta3: int = CE_HIDDEN, disc_length: int | None = None) -> NetworkCounts:
    """
    CE-CGAN counts with the conv running along the C sub-frames and
    eta4 = 2MN. Without `disc_length` the discriminator reuses the
    generator's eta_F and the combined closed form applies; with it, the
    discriminator's eta_F comes from its own input length and the total is
    the sum of the two parts.
    """
    if min(C, P, M, N) < 1:
        raise InvalidDimensionError(f"C, P, M, N must be >= 1 (got {C}, {P}, {M}, {N})")
    eta4 = 2 * M * N
    eta_f = conv_output_length(C, F_z, F_s)
    generator = ((F_z + eta3 + 1) * eta_f * F_n + (eta4 + 1) * eta3 + eta4,
                 (F_z + eta3) * eta_f * F_n + eta3 * eta4)

    eta_f_disc = eta_f if disc_length is None else conv_output_length(disc_length, F_z, F_s)
    discriminator = ((F_z + eta3 + 1) * eta_f_disc * F_n + 2 * eta3 + 1,
                     (F_z + eta3) * eta_f_disc * F_n + eta3)

    if disc_length is None:
        total = (2 * (F_z + eta3 + 1) * eta_f * F_n + eta4 * (eta3 + 1) + 3 * eta3 + 1,
                 2 * (F_z + eta3) * eta_f * F_n + eta3 * (eta4 + 1))
    else:
        total = _add(generator, discriminator)
    return NetworkCounts(generator=generator, discriminator=discriminator, total=total)


def reduction(benchmark: Counts, proposed: Counts) -> tuple[float, float]:
    """(benchmark - proposed) / benchmark per count type."""
    if benchmark[0] <= 0 or benchmark[1] <= 0:
        raise InvalidArgumentError(f"benchmark counts must be positive, got {benchmark}")
    return ((benchmark[0] - proposed[0]) / benchmark[0],
            (benchmark[1] - proposed[1]) / benchmark[1])


# ==================================================================
# Instrumented counts
# ==================================================================

def counted_se(M: int) -> NetworkCounts:
    generator = count_operations(inference_spec(se_generator_spec(M)))
    discriminator = count_operations(inference_spec(se_discriminator_spec(M)))
    return NetworkCounts(generator, discriminator, _add(generator, discriminator))


def counted_ce(M: int, N: int) -> NetworkCounts:
    generator = count_operations(inference_spec(ce_generator_spec(M, N)))
    discriminator = count_operations(inference_spec(ce_discriminator_spec(M, N)))
    return NetworkCounts(generator, discriminator, _add(generator, discriminator))


def benchmark_counts(link: str, M: int, N: int) -> Counts:
    """FFN benchmark [in, 256, 256, out] under the dense rule."""
    if link == "sensing":
        in_features, out_features = 2 * M * M, 2 * M * M
    else:
        in_features, out_features = 2 * N * M, 2 * M * N
    return dense_network_counts([in_features, FFN_HIDDEN, FFN_HIDDEN, out_features])


def counted_benchmark(link: str, M: int, N: int) -> Counts:
    in_features = 2 * M * M if link == "sensing" else 2 * N * M
    out_features = 2 * M * M if link == "sensing" else 2 * M * N
    return count_operations(ffn_spec(in_features, out_features))


# ==================================================================
# Reports
# ==================================================================

@dataclass(frozen=True)
class ComplexityRow:
    link: str
    M: int
    N: int
    part: str
    closed_form: Counts
    counted: Counts
    reduction: tuple[float, float]


@dataclass(frozen=True)
class ComplexityReport:
    rows: tuple

    def parity(self) -> bool:
        """True when every closed form equals its instrumented count."""
        return all(row.closed_form == row.counted for row in self.rows)


def _link_rows(link: str, M: int, N: int, closed: NetworkCounts, counted: NetworkCounts,
               benchmark: Counts, benchmark_counted: Counts) -> list[ComplexityRow]:
    rows = []
    for part in ("generator", "discriminator", "total"):
        proposed = getattr(closed, part)
        rows.append(ComplexityRow(link, M, N, part, proposed, getattr(counted, part),
                                  reduction(benchmark, proposed)))
    rows.append(ComplexityRow(link, M, N, "benchmark", benchmark, benchmark_counted, (0.0, 0.0)))
    return rows


def se_rows(M: int, N: int) -> list[ComplexityRow]:
    return _link_rows("sensing", M, N, complexity_se(M), counted_se(M),
                      benchmark_counts("sensing", M, N), counted_benchmark("sensing", M, N))


def ce_rows(M: int, N: int) -> list[ComplexityRow]:
    # The counter sees the discriminator's real conv input (2MN), so the closed form uses it too.
    closed = complexity_ce(C=N, P=M, M=M, N=N, disc_length=2 * M * N)
    return _link_rows("comm", M, N, closed, counted_ce(M, N),
                      benchmark_counts("comm", M, N), counted_benchmark("comm", M, N))


def framework_rows(M: int, N: int) -> list[ComplexityRow]:
    """Combined SE + CE totals at one (M, N)."""
    se_closed, ce_closed = complexity_se(M), complexity_ce(C=N, P=M, M=M, N=N, disc_length=2 * M * N)
    closed = _add(se_closed.total, ce_closed.total)
    counted = _add(counted_se(M).total, counted_ce(M, N).total)
    benchmark = _add(benchmark_counts("sensing", M, N), benchmark_counts("comm", M, N))
    benchmark_counted = _add(counted_benchmark("sensing", M, N), counted_benchmark("comm", M, N))
    return [
        ComplexityRow("framework", M, N, "total", closed, counted, reduction(benchmark, closed)),
        ComplexityRow("framework", M, N, "benchmark", benchmark, benchmark_counted, (0.0, 0.0)),
    ]


def complexity_report(M: int, N: int, m_values=(), n_values=()) -> ComplexityReport:
    """Sensing rows versus M, communication rows versus N (at fixed M) and the framework totals."""
    rows = []
    for m in m_values:
        rows.extend(se_rows(m, N))
    for n in n_values:
        rows.extend(ce_rows(M, n))
    rows.extend(framework_rows(M, N))
    return ComplexityReport(rows=tuple(rows))
