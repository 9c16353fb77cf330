#include "spnf/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <memory>

namespace spnf::nn {

namespace {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeMismatch(std::string(op) + ": shapes " + shape_str(a.shape()) + " vs " +
                            shape_str(b.shape()));
}

// Accumulates src (scaled) into parent i's gradient buffer.
void accum_grad(Node& out, std::size_t i, const double* src, double factor = 1.0) {
    Node* p = out.parents[i].get();
    if (!p->requires_grad)
        return;
    p->ensure_grad();
    p->grad_filled = true;
    const std::size_t n = p->data.size();
    for (std::size_t j = 0; j < n; ++j)
        p->grad[j] += factor * src[j];
}

Node* touched(Node& out, std::size_t i) {
    Node* p = out.parents[i].get();
    if (!p->requires_grad)
        return nullptr;
    p->ensure_grad();
    p->grad_filled = true;
    return p;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = make_op(a.shape(), {a, b}, [](Node& n) {
        accum_grad(n, 0, n.grad.data());
        accum_grad(n, 1, n.grad.data());
    });
    const std::size_t sz = a.size();
    for (std::size_t i = 0; i < sz; ++i)
        out.data()[i] = a.data()[i] + b.data()[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = make_op(a.shape(), {a, b}, [](Node& n) {
        accum_grad(n, 0, n.grad.data());
        accum_grad(n, 1, n.grad.data(), -1.0);
    });
    const std::size_t sz = a.size();
    for (std::size_t i = 0; i < sz; ++i)
        out.data()[i] = a.data()[i] - b.data()[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = make_op(a.shape(), {a, b}, [](Node& n) {
        const std::size_t sz = n.data.size();
        const double* av = n.parents[0]->data.data();
        const double* bv = n.parents[1]->data.data();
        if (Node* pa = touched(n, 0))
            for (std::size_t i = 0; i < sz; ++i)
                pa->grad[i] += n.grad[i] * bv[i];
        if (Node* pb = touched(n, 1))
            for (std::size_t i = 0; i < sz; ++i)
                pb->grad[i] += n.grad[i] * av[i];
    });
    const std::size_t sz = a.size();
    for (std::size_t i = 0; i < sz; ++i)
        out.data()[i] = a.data()[i] * b.data()[i];
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = make_op(a.shape(), {a}, [s](Node& n) {
        accum_grad(n, 0, n.grad.data(), s);
    });
    const std::size_t sz = a.size();
    for (std::size_t i = 0; i < sz; ++i)
        out.data()[i] = a.data()[i] * s;
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out = make_op(x.shape(), {x}, [](Node& n) {
        if (Node* p = touched(n, 0)) {
            const double* xv = p->data.data();
            for (std::size_t i = 0; i < n.data.size(); ++i)
                if (xv[i] > 0.0)
                    p->grad[i] += n.grad[i];
        }
    });
    const std::size_t sz = x.size();
    for (std::size_t i = 0; i < sz; ++i)
        out.data()[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
    return out;
}

Tensor sigmoid(const Tensor& x) {
    Tensor out = make_op(x.shape(), {x}, [](Node& n) {
        if (Node* p = touched(n, 0)) {
            for (std::size_t i = 0; i < n.data.size(); ++i) {
                double y = n.data[i];
                p->grad[i] += n.grad[i] * y * (1.0 - y);
            }
        }
    });
    const std::size_t sz = x.size();
    for (std::size_t i = 0; i < sz; ++i)
        out.data()[i] = 1.0 / (1.0 + std::exp(-x.data()[i]));
    return out;
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.shape().size() != 2 || w.shape().size() != 2 || b.shape().size() != 1 ||
        x.shape()[1] != w.shape()[0] || w.shape()[1] != b.shape()[0])
        throw ShapeMismatch("dense: x" + shape_str(x.shape()) + " w" + shape_str(w.shape()) +
                            " b" + shape_str(b.shape()));
    const std::size_t rows = x.shape()[0], in = x.shape()[1], cols = w.shape()[1];
    Tensor out = make_op({rows, cols}, {x, w, b}, [rows, in, cols](Node& n) {
        ConstMatMap g(n.grad.data(), rows, cols);
        ConstMatMap xm(n.parents[0]->data.data(), rows, in);
        ConstMatMap wm(n.parents[1]->data.data(), in, cols);
        if (Node* px = touched(n, 0))
            MatMap(px->grad.data(), rows, in).noalias() += g * wm.transpose();
        if (Node* pw = touched(n, 1))
            MatMap(pw->grad.data(), in, cols).noalias() += xm.transpose() * g;
        if (Node* pb = touched(n, 2))
            MatMap(pb->grad.data(), 1, cols).noalias() += g.colwise().sum();
    });
    ConstMatMap xm(x.data(), rows, in);
    ConstMatMap wm(w.data(), in, cols);
    MatMap om(out.data(), rows, cols);
    om.noalias() = xm * wm;
    om.rowwise() += ConstMatMap(b.data(), 1, cols).row(0);
    return out;
}

namespace {

struct ConvDims {
    std::size_t batch, cin, h, w, cout, kh, kw, ho, wo;
    int stride, padding;
};

// col layout: (cin*kh*kw) x (ho*wo), matching a row-major kernel view.
void im2col(const double* x, const ConvDims& d, std::size_t b, double* col) {
    const std::size_t plane = d.h * d.w;
    const double* xb = x + b * d.cin * plane;
    std::size_t r = 0;
    for (std::size_t c = 0; c < d.cin; ++c)
        for (std::size_t ki = 0; ki < d.kh; ++ki)
            for (std::size_t kj = 0; kj < d.kw; ++kj, ++r) {
                double* dst = col + r * d.ho * d.wo;
                for (std::size_t oy = 0; oy < d.ho; ++oy) {
                    long iy = long(oy) * d.stride + long(ki) - d.padding;
                    for (std::size_t ox = 0; ox < d.wo; ++ox) {
                        long ix = long(ox) * d.stride + long(kj) - d.padding;
                        dst[oy * d.wo + ox] =
                            (iy >= 0 && iy < long(d.h) && ix >= 0 && ix < long(d.w))
                                ? xb[c * plane + std::size_t(iy) * d.w + std::size_t(ix)]
                                : 0.0;
                    }
                }
            }
}

void col2im_accum(const double* col, const ConvDims& d, std::size_t b, double* dx) {
    const std::size_t plane = d.h * d.w;
    double* xb = dx + b * d.cin * plane;
    std::size_t r = 0;
    for (std::size_t c = 0; c < d.cin; ++c)
        for (std::size_t ki = 0; ki < d.kh; ++ki)
            for (std::size_t kj = 0; kj < d.kw; ++kj, ++r) {
                const double* src = col + r * d.ho * d.wo;
                for (std::size_t oy = 0; oy < d.ho; ++oy) {
                    long iy = long(oy) * d.stride + long(ki) - d.padding;
                    if (iy < 0 || iy >= long(d.h))
                        continue;
                    for (std::size_t ox = 0; ox < d.wo; ++ox) {
                        long ix = long(ox) * d.stride + long(kj) - d.padding;
                        if (ix >= 0 && ix < long(d.w))
                            xb[c * plane + std::size_t(iy) * d.w + std::size_t(ix)] +=
                                src[oy * d.wo + ox];
                    }
                }
            }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& b, int stride, int padding) {
    if (x.shape().size() != 4 || k.shape().size() != 4 || b.shape().size() != 1)
        throw ShapeMismatch("conv2d: expected x(B,C,H,W), k(O,C,kh,kw), b(O)");
    ConvDims d;
    d.batch = x.shape()[0]; d.cin = x.shape()[1]; d.h = x.shape()[2]; d.w = x.shape()[3];
    d.cout = k.shape()[0]; d.kh = k.shape()[2]; d.kw = k.shape()[3];
    d.stride = stride; d.padding = padding;
    if (k.shape()[1] != d.cin || b.shape()[0] != d.cout)
        throw ShapeMismatch("conv2d: channel mismatch x" + shape_str(x.shape()) + " k" +
                            shape_str(k.shape()));
    if (stride < 1 || padding < 0)
        throw InvalidArgument("conv2d: stride must be >= 1 and padding >= 0");
    if (d.h + 2 * padding < d.kh || d.w + 2 * padding < d.kw)
        throw ShapeMismatch("conv2d: kernel does not fit padded input");
    d.ho = (d.h + 2 * padding - d.kh) / stride + 1;
    d.wo = (d.w + 2 * padding - d.kw) / stride + 1;

    const std::size_t col_rows = d.cin * d.kh * d.kw;
    const std::size_t col_cols = d.ho * d.wo;
    bool track = grad_enabled() && (x.requires_grad() || k.requires_grad() || b.requires_grad());
    auto cols = std::make_shared<std::vector<double>>(
        (track ? d.batch : 1) * col_rows * col_cols);

    Tensor out = make_op({d.batch, d.cout, d.ho, d.wo}, {x, k, b}, [d, cols](Node& n) {
        const std::size_t col_rows = d.cin * d.kh * d.kw;
        const std::size_t col_cols = d.ho * d.wo;
        ConstMatMap km(n.parents[1]->data.data(), d.cout, col_rows);
        Node* px = touched(n, 0);
        Node* pk = touched(n, 1);
        Node* pb = touched(n, 2);
        std::vector<double> dcol(px ? col_rows * col_cols : 0);
        for (std::size_t bi = 0; bi < d.batch; ++bi) {
            ConstMatMap g(n.grad.data() + bi * d.cout * col_cols, d.cout, col_cols);
            ConstMatMap colm(cols->data() + bi * col_rows * col_cols, col_rows, col_cols);
            if (pk)
                MatMap(pk->grad.data(), d.cout, col_rows).noalias() += g * colm.transpose();
            if (pb)
                MatMap(pb->grad.data(), 1, d.cout).noalias() += g.rowwise().sum().transpose();
            if (px) {
                MatMap(dcol.data(), col_rows, col_cols).noalias() = km.transpose() * g;
                col2im_accum(dcol.data(), d, bi, px->grad.data());
            }
        }
    });

    ConstMatMap km(k.data(), d.cout, col_rows);
    std::vector<double> scratch;
    if (!track)
        scratch.resize(col_rows * col_cols);
    for (std::size_t bi = 0; bi < d.batch; ++bi) {
        double* col = track ? cols->data() + bi * col_rows * col_cols : scratch.data();
        im2col(x.data(), d, bi, col);
        MatMap om(out.data() + bi * d.cout * col_cols, d.cout, col_cols);
        om.noalias() = km * ConstMatMap(col, col_rows, col_cols);
        for (std::size_t o = 0; o < d.cout; ++o)
            om.row(o).array() += b.data()[o];
    }
    return out;
}

Tensor global_avg_pool(const Tensor& x) {
    if (x.shape().size() != 4)
        throw ShapeMismatch("global_avg_pool: expected (B,C,H,W), got " + shape_str(x.shape()));
    const std::size_t batch = x.shape()[0], ch = x.shape()[1];
    const std::size_t plane = x.shape()[2] * x.shape()[3];
    Tensor out = make_op({batch, ch}, {x}, [plane](Node& n) {
        if (Node* p = touched(n, 0)) {
            const double inv = 1.0 / double(plane);
            for (std::size_t i = 0; i < n.data.size(); ++i) {
                double g = n.grad[i] * inv;
                double* dst = p->grad.data() + i * plane;
                for (std::size_t j = 0; j < plane; ++j)
                    dst[j] += g;
            }
        }
    });
    for (std::size_t i = 0; i < batch * ch; ++i) {
        const double* src = x.data() + i * plane;
        double s = 0.0;
        for (std::size_t j = 0; j < plane; ++j)
            s += src[j];
        out.data()[i] = s / double(plane);
    }
    return out;
}

Tensor downsample2(const Tensor& x) {
    if (x.shape().size() != 4)
        throw ShapeMismatch("downsample2: expected (B,C,H,W), got " + shape_str(x.shape()));
    const std::size_t h = x.shape()[2], w = x.shape()[3];
    if (h % 2 != 0 || w % 2 != 0)
        throw ShapeMismatch("downsample2: spatial dims must be even, got " + shape_str(x.shape()));
    const std::size_t maps = x.shape()[0] * x.shape()[1];
    const std::size_t ho = h / 2, wo = w / 2;
    Tensor out = make_op({x.shape()[0], x.shape()[1], ho, wo}, {x}, [maps, h, w](Node& n) {
        if (Node* p = touched(n, 0)) {
            const std::size_t ho = h / 2, wo = w / 2;
            for (std::size_t m = 0; m < maps; ++m) {
                const double* g = n.grad.data() + m * ho * wo;
                double* dst = p->grad.data() + m * h * w;
                for (std::size_t oy = 0; oy < ho; ++oy)
                    for (std::size_t ox = 0; ox < wo; ++ox) {
                        double q = 0.25 * g[oy * wo + ox];
                        dst[(2 * oy) * w + 2 * ox] += q;
                        dst[(2 * oy) * w + 2 * ox + 1] += q;
                        dst[(2 * oy + 1) * w + 2 * ox] += q;
                        dst[(2 * oy + 1) * w + 2 * ox + 1] += q;
                    }
            }
        }
    });
    for (std::size_t m = 0; m < maps; ++m) {
        const double* src = x.data() + m * h * w;
        double* dst = out.data() + m * ho * wo;
        for (std::size_t oy = 0; oy < ho; ++oy)
            for (std::size_t ox = 0; ox < wo; ++ox)
                dst[oy * wo + ox] = 0.25 * (src[(2 * oy) * w + 2 * ox] +
                                            src[(2 * oy) * w + 2 * ox + 1] +
                                            src[(2 * oy + 1) * w + 2 * ox] +
                                            src[(2 * oy + 1) * w + 2 * ox + 1]);
    }
    return out;
}

Tensor upsample2(const Tensor& x) {
    if (x.shape().size() != 4)
        throw ShapeMismatch("upsample2: expected (B,C,H,W), got " + shape_str(x.shape()));
    const std::size_t maps = x.shape()[0] * x.shape()[1];
    const std::size_t h = x.shape()[2], w = x.shape()[3];
    Tensor out = make_op({x.shape()[0], x.shape()[1], 2 * h, 2 * w}, {x}, [maps, h, w](Node& n) {
        if (Node* p = touched(n, 0)) {
            for (std::size_t m = 0; m < maps; ++m) {
                const double* g = n.grad.data() + m * 4 * h * w;
                double* dst = p->grad.data() + m * h * w;
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t x2 = 0; x2 < w; ++x2)
                        dst[y * w + x2] += g[(2 * y) * 2 * w + 2 * x2] +
                                           g[(2 * y) * 2 * w + 2 * x2 + 1] +
                                           g[(2 * y + 1) * 2 * w + 2 * x2] +
                                           g[(2 * y + 1) * 2 * w + 2 * x2 + 1];
            }
        }
    });
    for (std::size_t m = 0; m < maps; ++m) {
        const double* src = x.data() + m * h * w;
        double* dst = out.data() + m * 4 * h * w;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x2 = 0; x2 < w; ++x2) {
                double v = src[y * w + x2];
                dst[(2 * y) * 2 * w + 2 * x2] = v;
                dst[(2 * y) * 2 * w + 2 * x2 + 1] = v;
                dst[(2 * y + 1) * 2 * w + 2 * x2] = v;
                dst[(2 * y + 1) * 2 * w + 2 * x2 + 1] = v;
            }
    }
    return out;
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.size() != sb.size() || axis < 0 || axis >= int(sa.size()))
        throw ShapeMismatch("concat: rank mismatch or bad axis");
    for (std::size_t i = 0; i < sa.size(); ++i)
        if (int(i) != axis && sa[i] != sb[i])
            throw ShapeMismatch("concat: shapes " + shape_str(sa) + " vs " + shape_str(sb) +
                                " differ off-axis");
    Shape so = sa;
    so[axis] += sb[axis];
    std::size_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i)
        outer *= sa[i];
    for (std::size_t i = axis + 1; i < sa.size(); ++i)
        inner *= sa[i];
    const std::size_t blk_a = sa[axis] * inner, blk_b = sb[axis] * inner;

    Tensor out = make_op(so, {a, b}, [outer, blk_a, blk_b](Node& n) {
        Node* pa = touched(n, 0);
        Node* pb = touched(n, 1);
        const double* g = n.grad.data();
        for (std::size_t o = 0; o < outer; ++o) {
            if (pa) {
                double* dst = pa->grad.data() + o * blk_a;
                for (std::size_t j = 0; j < blk_a; ++j)
                    dst[j] += g[o * (blk_a + blk_b) + j];
            }
            if (pb) {
                double* dst = pb->grad.data() + o * blk_b;
                for (std::size_t j = 0; j < blk_b; ++j)
                    dst[j] += g[o * (blk_a + blk_b) + blk_a + j];
            }
        }
    });
    for (std::size_t o = 0; o < outer; ++o) {
        std::copy(a.data() + o * blk_a, a.data() + (o + 1) * blk_a,
                  out.data() + o * (blk_a + blk_b));
        std::copy(b.data() + o * blk_b, b.data() + (o + 1) * blk_b,
                  out.data() + o * (blk_a + blk_b) + blk_a);
    }
    return out;
}

Tensor mul_channels(const Tensor& x, const Tensor& s) {
    if (x.shape().size() != 4 || s.shape().size() != 2 || x.shape()[0] != s.shape()[0] ||
        x.shape()[1] != s.shape()[1])
        throw ShapeMismatch("mul_channels: x" + shape_str(x.shape()) + " s" +
                            shape_str(s.shape()));
    const std::size_t maps = x.shape()[0] * x.shape()[1];
    const std::size_t plane = x.shape()[2] * x.shape()[3];
    Tensor out = make_op(x.shape(), {x, s}, [maps, plane](Node& n) {
        Node* px = touched(n, 0);
        Node* ps = touched(n, 1);
        const double* xv = n.parents[0]->data.data();
        const double* sv = n.parents[1]->data.data();
        for (std::size_t m = 0; m < maps; ++m) {
            const double* g = n.grad.data() + m * plane;
            if (px) {
                double* dst = px->grad.data() + m * plane;
                for (std::size_t j = 0; j < plane; ++j)
                    dst[j] += g[j] * sv[m];
            }
            if (ps) {
                const double* xp = xv + m * plane;
                double acc = 0.0;
                for (std::size_t j = 0; j < plane; ++j)
                    acc += g[j] * xp[j];
                ps->grad[m] += acc;
            }
        }
    });
    for (std::size_t m = 0; m < maps; ++m) {
        const double* src = x.data() + m * plane;
        double* dst = out.data() + m * plane;
        for (std::size_t j = 0; j < plane; ++j)
            dst[j] = src[j] * s.data()[m];
    }
    return out;
}

Tensor mul_spatial(const Tensor& x, const Tensor& m) {
    if (x.shape().size() != 4 || m.shape().size() != 4 || m.shape()[1] != 1 ||
        x.shape()[0] != m.shape()[0] || x.shape()[2] != m.shape()[2] ||
        x.shape()[3] != m.shape()[3])
        throw ShapeMismatch("mul_spatial: x" + shape_str(x.shape()) + " m" +
                            shape_str(m.shape()));
    const std::size_t batch = x.shape()[0], ch = x.shape()[1];
    const std::size_t plane = x.shape()[2] * x.shape()[3];
    Tensor out = make_op(x.shape(), {x, m}, [batch, ch, plane](Node& n) {
        Node* px = touched(n, 0);
        Node* pm = touched(n, 1);
        const double* xv = n.parents[0]->data.data();
        const double* mv = n.parents[1]->data.data();
        for (std::size_t b = 0; b < batch; ++b) {
            const double* mb = mv + b * plane;
            for (std::size_t c = 0; c < ch; ++c) {
                const std::size_t off = (b * ch + c) * plane;
                const double* g = n.grad.data() + off;
                if (px) {
                    double* dst = px->grad.data() + off;
                    for (std::size_t j = 0; j < plane; ++j)
                        dst[j] += g[j] * mb[j];
                }
                if (pm) {
                    double* dst = pm->grad.data() + b * plane;
                    const double* xp = xv + off;
                    for (std::size_t j = 0; j < plane; ++j)
                        dst[j] += g[j] * xp[j];
                }
            }
        }
    });
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < ch; ++c) {
            const std::size_t off = (b * ch + c) * plane;
            for (std::size_t j = 0; j < plane; ++j)
                out.data()[off + j] = x.data()[off + j] * m.data()[b * plane + j];
        }
    return out;
}

Tensor mul_cols(const Tensor& x, const std::vector<double>& col_weights) {
    if (x.shape().size() != 2 || x.shape()[1] != col_weights.size())
        throw ShapeMismatch("mul_cols: x" + shape_str(x.shape()) + " vs " +
                            std::to_string(col_weights.size()) + " weights");
    const std::size_t rows = x.shape()[0], cols = x.shape()[1];
    auto w = std::make_shared<std::vector<double>>(col_weights);
    Tensor out = make_op(x.shape(), {x}, [rows, cols, w](Node& n) {
        if (Node* p = touched(n, 0))
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c)
                    p->grad[r * cols + c] += n.grad[r * cols + c] * (*w)[c];
    });
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out.data()[r * cols + c] = x.data()[r * cols + c] * col_weights[c];
    return out;
}

Tensor sum_all(const Tensor& x) {
    Tensor out = make_op({1}, {x}, [](Node& n) {
        if (Node* p = touched(n, 0)) {
            const double g = n.grad[0];
            for (std::size_t i = 0; i < p->grad.size(); ++i)
                p->grad[i] += g;
        }
    });
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        s += x.data()[i];
    out.data()[0] = s;
    return out;
}

Tensor mse(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "mse");
    const std::size_t n = pred.size();
    Tensor out = make_op({1}, {pred, target}, [n](Node& nd) {
        const double g = nd.grad[0] * 2.0 / double(n);
        const double* pv = nd.parents[0]->data.data();
        const double* tv = nd.parents[1]->data.data();
        if (Node* pp = touched(nd, 0))
            for (std::size_t i = 0; i < n; ++i)
                pp->grad[i] += g * (pv[i] - tv[i]);
        if (Node* pt = touched(nd, 1))
            for (std::size_t i = 0; i < n; ++i)
                pt->grad[i] -= g * (pv[i] - tv[i]);
    });
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = pred.data()[i] - target.data()[i];
        s += d * d;
    }
    out.data()[0] = s / double(n);
    return out;
}

Tensor rows_to_nchw(const Tensor& x, std::size_t height, std::size_t width) {
    if (x.shape().size() != 2 || x.shape()[0] != height * width)
        throw ShapeMismatch("rows_to_nchw: x" + shape_str(x.shape()) + " vs " +
                            std::to_string(height) + "x" + std::to_string(width) + " pixels");
    const std::size_t channels = x.shape()[1];
    Tensor out = make_op({1, channels, height, width}, {x},
                         [height, width, channels](Node& n) {
        if (Node* p = touched(n, 0)) {
            const std::size_t pixels = height * width;
            for (std::size_t c = 0; c < channels; ++c)
                for (std::size_t i = 0; i < pixels; ++i)
                    p->grad[i * channels + c] += n.grad[c * pixels + i];
        }
    });
    const std::size_t pixels = height * width;
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < pixels; ++i)
            out.data()[c * pixels + i] = x.data()[i * channels + c];
    return out;
}

}  // namespace spnf::nn
