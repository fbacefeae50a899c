import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stcp.errors import DataError, FormatError, ShapeError
from stcp.field_tensor import (
    FieldTensor,
    from_array,
    make_tensor,
    read_tensor,
    read_tensor_file,
    write_tensor,
    write_tensor_file,
)


def roundtrip(tensor: FieldTensor, allow_inf: bool = False) -> FieldTensor:
    buf = io.BytesIO()
    write_tensor(tensor, buf)
    buf.seek(0)
    return read_tensor(buf, allow_inf=allow_inf)


class TestMakeTensor:
    def test_row_major_layout(self):
        # ((t*nx + x)*ny + y)*nvar + v: element (1,0,0,0) of dims [2,2,1,1]
        # sits at flat index 2.
        t = make_tensor([2, 2, 1, 1], [1.0, 2.0, 3.0, 4.0])
        assert t.item(1, 0, 0, 0) == 3.0
        assert t.item(0, 1, 0, 0) == 2.0

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            make_tensor([2, 2, 1, 1], [1.0, 2.0, 3.0])

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            make_tensor([1, 2, 1, 1], [1.0, float("nan")])
        with pytest.raises(DataError):
            make_tensor([1, 2, 1, 1], [1.0, float("inf")])

    def test_allow_inf_admits_plus_inf_only(self):
        t = make_tensor([1, 2, 1, 1], [1.0, float("inf")], allow_inf=True)
        assert math.isinf(t.item(0, 1, 0, 0))
        with pytest.raises(DataError):
            make_tensor([1, 2, 1, 1], [1.0, float("-inf")], allow_inf=True)
        with pytest.raises(DataError):
            make_tensor([1, 2, 1, 1], [1.0, float("nan")], allow_inf=True)

    def test_negative_extent_rejected(self):
        with pytest.raises(ShapeError):
            make_tensor([1, -2, 1, 1], [])

    def test_zero_extent_allowed(self):
        t = make_tensor([0, 3, 1, 1], [])
        assert t.size == 0


class TestOps:
    def test_add_sub_scale_abs(self):
        a = make_tensor([1, 3, 1, 1], [1.0, -2.0, 3.0])
        b = make_tensor([1, 3, 1, 1], [0.5, 0.5, 0.5])
        assert np.array_equal(a.add(b).flat(), [1.5, -1.5, 3.5])
        assert np.array_equal(a.sub(b).flat(), [0.5, -2.5, 2.5])
        assert np.array_equal(a.abs().flat(), [1.0, 2.0, 3.0])
        assert np.array_equal(a.scale(2.0).flat(), [2.0, -4.0, 6.0])

    def test_dim_mismatch(self):
        a = make_tensor([1, 3, 1, 1], [1.0, 2.0, 3.0])
        b = make_tensor([1, 2, 1, 1], [1.0, 2.0])
        with pytest.raises(ShapeError):
            a.add(b)

    def test_stats(self):
        t = make_tensor([1, 4, 1, 1], [0.0, 1.0, 2.0, 3.0])
        s = t.stats()
        assert s.mean == 1.5
        assert s.min == 0.0 and s.max == 3.0
        assert s.l2norm == pytest.approx(math.sqrt(14.0))
        assert s.min <= s.mean <= s.max

    def test_immutability(self):
        t = make_tensor([1, 2, 1, 1], [1.0, 2.0])
        with pytest.raises(ValueError):
            t.data[0, 0, 0, 0] = 5.0


class TestSerialization:
    def test_roundtrip_bitwise_with_negative_zero(self):
        vals = [0.0, -0.0, 1.5, -3.25, 1e-300, -1e300]
        t = make_tensor([1, 6, 1, 1], vals)
        back = roundtrip(t)
        assert back.data.tobytes() == t.data.tobytes()
        # sign bit of -0.0 survives
        assert math.copysign(1.0, back.item(0, 1, 0, 0)) == -1.0

    def test_roundtrip_random_payload(self):
        rng = np.random.default_rng(7)
        arr = rng.standard_normal((3, 5, 4, 2))
        t = FieldTensor(arr)
        back = roundtrip(t)
        assert back.dims == (3, 5, 4, 2)
        assert back.data.tobytes() == t.data.tobytes()

    def test_header_layout(self):
        t = make_tensor([1, 2, 1, 1], [1.0, 2.0])
        buf = io.BytesIO()
        n = write_tensor(t, buf)
        raw = buf.getvalue()
        assert n == len(raw) == 4 + 1 + 16 + 16
        assert raw[:4] == b"CPT1"
        assert raw[4] == 4

    def test_bad_magic(self):
        with pytest.raises(FormatError):
            read_tensor(io.BytesIO(b"NOPE" + bytes(30)))

    def test_truncated_header(self):
        with pytest.raises(FormatError):
            read_tensor(io.BytesIO(b"CPT1\x04\x01"))

    def test_truncated_payload(self):
        t = make_tensor([1, 4, 1, 1], [1.0, 2.0, 3.0, 4.0])
        buf = io.BytesIO()
        write_tensor(t, buf)
        clipped = buf.getvalue()[:-8]
        with pytest.raises(FormatError):
            read_tensor(io.BytesIO(clipped))

    def test_unsupported_rank(self):
        t = make_tensor([1, 2, 1, 1], [1.0, 2.0])
        buf = io.BytesIO()
        write_tensor(t, buf)
        raw = bytearray(buf.getvalue())
        raw[4] = 3
        with pytest.raises(FormatError):
            read_tensor(io.BytesIO(bytes(raw)))

    def test_inf_payload_needs_flag(self):
        t = make_tensor([1, 2, 1, 1], [1.0, float("inf")], allow_inf=True)
        buf = io.BytesIO()
        write_tensor(t, buf)
        buf.seek(0)
        with pytest.raises(DataError):
            read_tensor(buf)
        buf.seek(0)
        back = read_tensor(buf, allow_inf=True)
        assert math.isinf(back.item(0, 1, 0, 0))

    def test_file_helper_with_sidecar(self, tmp_path):
        t = make_tensor([1, 3, 1, 1], [1.0, float("inf"), 3.0], allow_inf=True)
        path = write_tensor_file(tmp_path / "q", t, provenance={"seed": 9})
        assert path.name == "q.cpt"
        assert (tmp_path / "q.json").exists()
        back = read_tensor_file(path)  # sidecar carries allow_inf
        assert back.data.tobytes() == t.data.tobytes()


@st.composite
def small_tensors(draw):
    dims = tuple(draw(st.integers(min_value=1, max_value=4)) for _ in range(4))
    n = int(np.prod(dims))
    vals = draw(
        st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
            min_size=n,
            max_size=n,
        )
    )
    return make_tensor(dims, vals)


class TestProperties:
    @settings(max_examples=50, deadline=None)
    @given(small_tensors())
    def test_serialization_is_identity(self, t):
        back = roundtrip(t)
        assert back.dims == t.dims
        assert back.data.tobytes() == t.data.tobytes()

    @settings(max_examples=50, deadline=None)
    @given(small_tensors(), st.floats(min_value=-10, max_value=10, allow_nan=False))
    def test_elementwise_ops_commute_with_flattening(self, t, factor):
        assert np.array_equal(t.scale(factor).flat(), t.flat() * factor)
        assert np.array_equal(t.abs().flat(), np.abs(t.flat()))
        assert np.array_equal(t.add(t).flat(), t.flat() + t.flat())

    @settings(max_examples=25, deadline=None)
    @given(
        st.tuples(*(st.integers(min_value=1, max_value=4) for _ in range(4)))
    )
    def test_flat_index_is_a_bijection(self, dims):
        nt, nx, ny, nv = dims
        n = nt * nx * ny * nv
        t = make_tensor(dims, np.arange(n, dtype=float))
        seen = set()
        for i in range(nt):
            for j in range(nx):
                for k in range(ny):
                    for l in range(nv):
                        flat = ((i * nx + j) * ny + k) * nv + l
                        assert t.item(i, j, k, l) == float(flat)
                        seen.add(flat)
        assert seen == set(range(n))


def test_from_array_pads_rank():
    t = from_array(np.ones((3, 5)))
    assert t.dims == (3, 5, 1, 1)
    with pytest.raises(ShapeError):
        from_array(np.ones((1, 1, 1, 1, 1)))
