"""Where the blocked kernel stops paying off, in loop-trip terms.

On matrices with a constant Z non-zeros per column, the one-column kernel
runs n*Z main-loop trips while the blocked kernel at block size b runs
(n/b)*Z^2.  Their ratio is Z/b: below one block's worth of non-zeros per
column, processing b columns per instruction wins; past it, the one-column
kernel does.  This sweep prints both counters over the Z grid and the ratio.
"""

import vecspgemm as vg
from vecspgemm import VecEngine

N = 2560
B_SIZE = 40

print(f"n = {N}, block size = {B_SIZE}")
print(f"{'Z':>3} {'one-column trips':>17} {'blocked trips':>14} {'ratio':>7}")
for z in (2, 4, 5, 6, 8, 10, 20, 40, 64):
    A = vg.generate_synthetic(N, z, seed=1)
    _, spa = vg.spa_kernel(A, A, VecEngine())
    _, spars = vg.spars_kernel(A, A, B_SIZE, B_SIZE, VecEngine())
    ratio = spars.loop_iterations / spa.loop_iterations
    marker = "  <- blocked wins" if ratio < 1 else "  <- one-column wins"
    print(f"{z:>3} {spa.loop_iterations:>17} {spars.loop_iterations:>14} "
          f"{ratio:>7.3f}{marker}")

print("\nthe ratio equals Z / block size exactly on these uniform matrices;")
print("wall-clock behaviour additionally depends on the memory subsystem,")
print("which this model only reflects as the indexed-access address range:")
for b in (8, 40, 256):
    A = vg.generate_synthetic(N, 4, seed=1)
    _, rep = vg.spars_kernel(A, A, b, b, VecEngine())
    print(f"  block {b:>3}: widest indexed span {rep.max_index_range:>8}")
