"""Euler-Maruyama kernel for the signal/idler envelope pair.

Kept in its own module so the numba compilation cost is paid only when a
simulation actually runs.  The kernel advances one trajectory through one
pre-generated noise chunk; all RNG stays outside (numpy Philox streams)
so results are bit-identical for a given (seed, trajectory index)
regardless of chunking or scheduling.
"""

import numpy as np
from numba import njit

#: Steps per noise chunk.  Fixed: changing it must not change results
#: (noise is consumed strictly sequentially), but keeping it constant also
#: pins memory use (~8 MB per chunk).
CHUNK_STEPS = 1 << 18


@njit(cache=True)
def advance_chunk(vp, vm, loss, nonlin_half, drive_half, dt, amp, noise,
                  out_vp, out_vm, step0, n_out0, store_every):
    """Advance (vp, vm) through `noise` (shape (m, 4) standard normals).

    drift:  dv+/dt = -(loss + i nonlin_half n) v+ - i drive_half conj(v-)
            dv-/dt = -(loss + i nonlin_half n) v- - i drive_half conj(v+)
            n = (|v+|^2 + |v-|^2) / 2  evaluated per step
    noise:  amp (xi_1 + i xi_2) per mode and step, amp = sqrt(n_th loss dt)

    Stored samples land in out_vp/out_vm every `store_every` global steps.
    Returns (vp, vm, next_out_index, bad_step); bad_step >= 0 flags the
    first non-finite state.
    """
    m = noise.shape[0]
    k_out = n_out0
    bad = -1
    for i in range(m):
        n = 0.5 * (vp.real * vp.real + vp.imag * vp.imag
                   + vm.real * vm.real + vm.imag * vm.imag)
        if not (n <= 1.7e308):
            bad = step0 + i
            break
        c = -loss - 1j * (nonlin_half * n)
        dvp = (c * vp - 1j * drive_half * np.conj(vm)) * dt \
            + amp * (noise[i, 0] + 1j * noise[i, 1])
        dvm = (c * vm - 1j * drive_half * np.conj(vp)) * dt \
            + amp * (noise[i, 2] + 1j * noise[i, 3])
        vp = vp + dvp
        vm = vm + dvm
        if (step0 + i + 1) % store_every == 0:
            out_vp[k_out] = vp
            out_vm[k_out] = vm
            k_out += 1
    return vp, vm, k_out, bad
