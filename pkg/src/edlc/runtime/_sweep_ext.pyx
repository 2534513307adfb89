# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Row-wise compiled executor for sweep programs.

Processes one contiguous innermost row at a time: every instruction runs
over the row into a scratch register, loads point straight into the state
array. Built without fast-math or FP contraction so each operation rounds
exactly like the numpy fallback.
"""

from libc.math cimport cos, exp, fabs, log, sin, sqrt
from libc.stdlib cimport free, malloc

cdef enum:
    OP_CONST = 0
    OP_LOAD = 1
    OP_COORD = 2
    OP_NEG = 3
    OP_ADD = 4
    OP_SUB = 5
    OP_MUL = 6
    OP_DIV = 7
    OP_POW = 8
    OP_CALL = 9
    OP_MAD = 10
    OP_STORE = 11


cdef inline double call1(int fn, double x) noexcept nogil:
    if fn == 0:
        return exp(x)
    if fn == 1:
        return sin(x)
    if fn == 2:
        return cos(x)
    if fn == 3:
        return sqrt(x)
    if fn == 4:
        return log(x)
    return fabs(x)


cdef void run_row(double *data, Py_ssize_t field_size, Py_ssize_t base, Py_ssize_t n,
                  const long long[:, ::1] code, const double[::1] consts,
                  double **ptr, double *scratch,
                  double c0, double c1, const double[::1] origin3, const double[::1] spacing3,
                  Py_ssize_t lo2, Py_ssize_t g2) noexcept nogil:
    cdef Py_ssize_t ip, j, e
    cdef long long op, dst, a, b, c
    cdef double v, acc
    cdef double *r
    cdef double *x
    cdef double *y
    cdef double *z
    cdef Py_ssize_t ninstr = code.shape[0]
    for ip in range(ninstr):
        op = code[ip, 0]
        dst = code[ip, 1]
        a = code[ip, 2]
        b = code[ip, 3]
        c = code[ip, 4]
        if op == OP_LOAD:
            ptr[dst] = data + a * field_size + base + code[ip, 5]
            continue
        if op == OP_STORE:
            r = data + dst * field_size + base
            x = ptr[a]
            for j in range(n):
                r[j] = x[j]
            continue
        r = scratch + dst * n
        if op == OP_CONST:
            v = consts[a]
            for j in range(n):
                r[j] = v
        elif op == OP_COORD:
            if a == 2:
                for j in range(n):
                    r[j] = origin3[2] + <double>(lo2 + j - g2) * spacing3[2]
            else:
                v = c0 if a == 0 else c1
                for j in range(n):
                    r[j] = v
        elif op == OP_NEG:
            x = ptr[a]
            for j in range(n):
                r[j] = -x[j]
        elif op == OP_ADD:
            x = ptr[a]
            y = ptr[b]
            for j in range(n):
                r[j] = x[j] + y[j]
        elif op == OP_SUB:
            x = ptr[a]
            y = ptr[b]
            for j in range(n):
                r[j] = x[j] - y[j]
        elif op == OP_MUL:
            x = ptr[a]
            y = ptr[b]
            for j in range(n):
                r[j] = x[j] * y[j]
        elif op == OP_DIV:
            x = ptr[a]
            y = ptr[b]
            for j in range(n):
                r[j] = x[j] / y[j]
        elif op == OP_MAD:
            x = ptr[a]
            y = ptr[b]
            z = ptr[c]
            for j in range(n):
                v = x[j] * y[j]
                r[j] = v + z[j]
        elif op == OP_POW:
            x = ptr[a]
            if b == 0:
                for j in range(n):
                    r[j] = 1.0
            else:
                for j in range(n):
                    v = x[j]
                    acc = v
                    for e in range((b if b > 0 else -b) - 1):
                        acc = acc * v
                    r[j] = 1.0 / acc if b < 0 else acc
        elif op == OP_CALL:
            x = ptr[a]
            for j in range(n):
                r[j] = call1(<int>b, x[j])
        ptr[dst] = r


def sweep(double[::1] data, Py_ssize_t field_size, Py_ssize_t[::1] shape3,
          const long long[:, ::1] code, const double[::1] consts, int nregs,
          const double[::1] origin3, const double[::1] spacing3, Py_ssize_t[::1] ghost3,
          Py_ssize_t[::1] lo3, Py_ssize_t[::1] hi3):
    """Execute ``code`` over the padded-index box ``[lo3, hi3)`` of a 3-axis layout."""
    cdef Py_ssize_t n = hi3[2] - lo3[2]
    cdef Py_ssize_t i0, i1, base
    cdef double c0, c1
    if n <= 0 or hi3[0] <= lo3[0] or hi3[1] <= lo3[1] or code.shape[0] == 0:
        return
    cdef double *scratch = <double *> malloc(nregs * n * sizeof(double))
    cdef double **ptr = <double **> malloc(nregs * sizeof(double *))
    if scratch == NULL or ptr == NULL:
        free(scratch)
        free(ptr)
        raise MemoryError()
    with nogil:
        for i0 in range(lo3[0], hi3[0]):
            c0 = origin3[0] + <double>(i0 - ghost3[0]) * spacing3[0]
            for i1 in range(lo3[1], hi3[1]):
                c1 = origin3[1] + <double>(i1 - ghost3[1]) * spacing3[1]
                base = (i0 * shape3[1] + i1) * shape3[2] + lo3[2]
                run_row(&data[0], field_size, base, n, code, consts, ptr, scratch,
                        c0, c1, origin3, spacing3, lo3[2], ghost3[2])
    free(scratch)
    free(ptr)
