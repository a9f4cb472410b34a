# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled event-loop kernel of the simulator.

Consumes the same pre-drawn stream words as the numpy fallback (identical
slot layout), so both backends produce bit-identical histograms.  The scan
stops at the first triggered window; remaining slots of the trial are simply
left unread.
"""

from libc.stdint cimport int64_t


def run_chunk(const double[:, ::1] uniforms, tables, int64_t[::1] counts):
    """Accumulate surviving photon counts for one chunk of trials."""
    cdef Py_ssize_t w = tables.n_windows
    cdef double p_dark = tables.p_dark
    cdef const double[::1] pair_cdf = tables.pair_cdf
    cdef const double[::1] herald_prob = tables.herald_prob
    cdef const double[:, ::1] survival_cdf = tables.survival_cdf
    cdef Py_ssize_t trials = uniforms.shape[0]
    cdef Py_ssize_t t, win, n, k, routed_n
    cdef double u
    cdef bint trig

    if uniforms.shape[1] < 3 * w + 1:
        raise ValueError("uniform chunk narrower than the slot layout")

    with nogil:
        for t in range(trials):
            routed_n = -1
            n = 0
            for win in range(w):
                u = uniforms[t, win]
                n = 0
                while u >= pair_cdf[n]:
                    n += 1
                trig = uniforms[t, w + win] < herald_prob[n]
                if p_dark > 0.0 and uniforms[t, 2 * w + win] < p_dark:
                    trig = True
                if trig:
                    routed_n = n
                    break
            if routed_n < 0:
                routed_n = n  # bypass: last window is routed unheralded
            u = uniforms[t, 3 * w]
            k = 0
            while u >= survival_cdf[routed_n, k]:
                k += 1
            counts[k] += 1
