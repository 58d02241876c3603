#include "rawcsi/nn/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rawcsi/error.h"

namespace rawcsi::nn {

namespace {

struct Dims4 {
  std::size_t n, h, w, c;
  bool batched;
};

Dims4 spatialDims(const Tensor& x, const char* what) {
  if (x.rank() == 4) return {x.dim(0), x.dim(1), x.dim(2), x.dim(3), true};
  if (x.rank() == 3) return {1, x.dim(0), x.dim(1), x.dim(2), false};
  fail(Errc::kShapeMismatch, std::string(what) + " expects [H,W,C] or [N,H,W,C], got " + shapeString(x.shape()));
}

Shape spatialShape(const Dims4& d, std::size_t h, std::size_t w, std::size_t c) {
  return d.batched ? Shape{d.n, h, w, c} : Shape{h, w, c};
}

double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

struct ConvShapes {
  Dims4 in;
  std::size_t kh, kw, cout;
  ConvGeometry g;
};

ConvShapes convShapes(const Tensor& x, const Tensor& kernel, Extent2 stride, Padding padding) {
  const Dims4 d = spatialDims(x, "conv2d");
  if (kernel.rank() != 4 || kernel.dim(2) != d.c) {
    fail(Errc::kShapeMismatch, "kernel " + shapeString(kernel.shape()) + " for input " + shapeString(x.shape()));
  }
  if (stride.rows == 0 || stride.cols == 0) fail(Errc::kShapeMismatch, "zero stride");
  const Extent2 k{kernel.dim(0), kernel.dim(1)};
  return {d, k.rows, k.cols, kernel.dim(3), convGeometry(d.h, d.w, k, stride, padding)};
}

}  // namespace

ConvGeometry convGeometry(std::size_t inRows, std::size_t inCols, Extent2 kernel, Extent2 stride,
                          Padding padding) {
  if (kernel.rows == 0 || kernel.cols == 0 || stride.rows == 0 || stride.cols == 0) {
    fail(Errc::kShapeMismatch, "kernel and stride extents must be positive");
  }
  ConvGeometry g;
  if (padding == Padding::kValid) {
    if (kernel.rows > inRows || kernel.cols > inCols) {
      fail(Errc::kKernelTooLarge, "kernel " + std::to_string(kernel.rows) + "x" + std::to_string(kernel.cols) +
                                      " on input " + std::to_string(inRows) + "x" + std::to_string(inCols));
    }
    g.outRows = (inRows - kernel.rows) / stride.rows + 1;
    g.outCols = (inCols - kernel.cols) / stride.cols + 1;
    return g;
  }
  g.outRows = (inRows + stride.rows - 1) / stride.rows;
  g.outCols = (inCols + stride.cols - 1) / stride.cols;
  const auto pad = [](std::size_t out, std::size_t s, std::size_t k, std::size_t in) -> std::size_t {
    const std::size_t need = (out - 1) * s + k;
    return need > in ? need - in : 0;
  };
  g.padTop = pad(g.outRows, stride.rows, kernel.rows, inRows) / 2;
  g.padLeft = pad(g.outCols, stride.cols, kernel.cols, inCols) / 2;
  return g;
}

Tensor conv2dForward(const Tensor& x, const Tensor& kernel, const Tensor& bias, Extent2 stride,
                     Padding padding) {
  const auto s = convShapes(x, kernel, stride, padding);
  const auto& [d, kh, kw, cout, g] = s;
  if (!bias.empty() && bias.size() != cout) fail(Errc::kShapeMismatch, "bias size");
  Tensor out(spatialShape(d, g.outRows, g.outCols, cout));
  const double* xp = x.data().data();
  const double* kp = kernel.data().data();
  double* op = out.data().data();
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t oh = 0; oh < g.outRows; ++oh) {
      for (std::size_t ow = 0; ow < g.outCols; ++ow) {
        double* y = op + ((n * g.outRows + oh) * g.outCols + ow) * cout;
        if (!bias.empty()) std::copy_n(bias.data().data(), cout, y);
        for (std::size_t ki = 0; ki < kh; ++ki) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * stride.rows + ki) -
                                    static_cast<std::ptrdiff_t>(g.padTop);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) continue;
          for (std::size_t kj = 0; kj < kw; ++kj) {
            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * stride.cols + kj) -
                                      static_cast<std::ptrdiff_t>(g.padLeft);
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(d.w)) continue;
            const double* xv = xp + ((n * d.h + ih) * d.w + iw) * d.c;
            const double* kr = kp + (ki * kw + kj) * d.c * cout;
            for (std::size_t ci = 0; ci < d.c; ++ci) {
              if (xv[ci] != 0.0) axpy(xv[ci], kr + ci * cout, y, cout);
            }
          }
        }
      }
    }
  }
  return out;
}

Conv2dGrads conv2dBackward(const Tensor& x, const Tensor& kernel, const Tensor& dy, Extent2 stride,
                           Padding padding, bool needInputGrad) {
  const auto s = convShapes(x, kernel, stride, padding);
  const auto& [d, kh, kw, cout, g] = s;
  if (dy.size() != d.n * g.outRows * g.outCols * cout) {
    fail(Errc::kShapeMismatch, "conv2d output gradient " + shapeString(dy.shape()));
  }
  Conv2dGrads grads{needInputGrad ? Tensor(x.shape()) : Tensor(), Tensor(kernel.shape()), Tensor({cout})};
  const double* xp = x.data().data();
  const double* kp = kernel.data().data();
  const double* gp = dy.data().data();
  double* dkp = grads.dKernel.data().data();
  double* dxp = needInputGrad ? grads.dx.data().data() : nullptr;
  double* dbp = grads.dBias.data().data();
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t oh = 0; oh < g.outRows; ++oh) {
      for (std::size_t ow = 0; ow < g.outCols; ++ow) {
        const double* gy = gp + ((n * g.outRows + oh) * g.outCols + ow) * cout;
        for (std::size_t co = 0; co < cout; ++co) dbp[co] += gy[co];
        for (std::size_t ki = 0; ki < kh; ++ki) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * stride.rows + ki) -
                                    static_cast<std::ptrdiff_t>(g.padTop);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) continue;
          for (std::size_t kj = 0; kj < kw; ++kj) {
            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * stride.cols + kj) -
                                      static_cast<std::ptrdiff_t>(g.padLeft);
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(d.w)) continue;
            const std::size_t xoff = ((n * d.h + ih) * d.w + iw) * d.c;
            const std::size_t koff = (ki * kw + kj) * d.c * cout;
            for (std::size_t ci = 0; ci < d.c; ++ci) {
              const double xv = xp[xoff + ci];
              if (xv != 0.0) axpy(xv, gy, dkp + koff + ci * cout, cout);
              if (dxp) dxp[xoff + ci] += dot(kp + koff + ci * cout, gy, cout);
            }
          }
        }
      }
    }
  }
  return grads;
}

Tensor batchNormTrain(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                      BatchNormCache& cache) {
  const Dims4 d = spatialDims(x, "batchnorm");
  if (gamma.size() != d.c || beta.size() != d.c) fail(Errc::kShapeMismatch, "batchnorm gamma/beta size");
  if (d.n < 2) fail(Errc::kBatchTooSmall, "train-mode batch norm needs N >= 2");
  const std::size_t count = d.n * d.h * d.w;
  const double* xp = x.data().data();
  cache.batchMean.assign(d.c, 0.0);
  cache.batchVar.assign(d.c, 0.0);
  for (std::size_t p = 0; p < count; ++p)
    for (std::size_t ch = 0; ch < d.c; ++ch) cache.batchMean[ch] += xp[p * d.c + ch];
  for (auto& v : cache.batchMean) v /= static_cast<double>(count);
  for (std::size_t p = 0; p < count; ++p) {
    for (std::size_t ch = 0; ch < d.c; ++ch) {
      const double dv = xp[p * d.c + ch] - cache.batchMean[ch];
      cache.batchVar[ch] += dv * dv;
    }
  }
  cache.invStd.resize(d.c);
  for (std::size_t ch = 0; ch < d.c; ++ch) {
    cache.batchVar[ch] /= static_cast<double>(count);
    cache.invStd[ch] = 1.0 / std::sqrt(cache.batchVar[ch] + eps);
  }
  cache.xhat = Tensor(x.shape());
  Tensor y(x.shape());
  double* hp = cache.xhat.data().data();
  double* yp = y.data().data();
  for (std::size_t p = 0; p < count; ++p) {
    for (std::size_t ch = 0; ch < d.c; ++ch) {
      const std::size_t i = p * d.c + ch;
      hp[i] = (xp[i] - cache.batchMean[ch]) * cache.invStd[ch];
      yp[i] = gamma.flat(ch) * hp[i] + beta.flat(ch);
    }
  }
  return y;
}

Tensor batchNormInfer(const Tensor& x, const Tensor& gamma, const Tensor& beta, const RunningStats& running,
                      double eps) {
  const Dims4 d = spatialDims(x, "batchnorm");
  if (gamma.size() != d.c || beta.size() != d.c || running.mean.size() != d.c || running.var.size() != d.c) {
    fail(Errc::kShapeMismatch, "batchnorm parameter size");
  }
  std::vector<double> a(d.c), b(d.c);
  for (std::size_t ch = 0; ch < d.c; ++ch) {
    a[ch] = gamma.flat(ch) / std::sqrt(running.var.flat(ch) + eps);
    b[ch] = beta.flat(ch) - a[ch] * running.mean.flat(ch);
  }
  Tensor y(x.shape());
  const std::size_t count = d.n * d.h * d.w;
  for (std::size_t p = 0; p < count; ++p)
    for (std::size_t ch = 0; ch < d.c; ++ch) y.flat(p * d.c + ch) = a[ch] * x.flat(p * d.c + ch) + b[ch];
  return y;
}

Tensor batchNormForward(const Tensor& x, const Tensor& gamma, const Tensor& beta, RunningStats& running,
                        Mode mode, double momentum, double eps, BatchNormCache* cache) {
  if (mode == Mode::kInfer) return batchNormInfer(x, gamma, beta, running, eps);
  BatchNormCache local;
  BatchNormCache& c = cache ? *cache : local;
  Tensor y = batchNormTrain(x, gamma, beta, eps, c);
  if (running.mean.size() != c.batchMean.size() || running.var.size() != c.batchVar.size()) {
    fail(Errc::kShapeMismatch, "running statistics size");
  }
  for (std::size_t ch = 0; ch < c.batchMean.size(); ++ch) {
    running.mean.flat(ch) = (1.0 - momentum) * running.mean.flat(ch) + momentum * c.batchMean[ch];
    running.var.flat(ch) = (1.0 - momentum) * running.var.flat(ch) + momentum * c.batchVar[ch];
  }
  return y;
}

BatchNormGrads batchNormBackward(const BatchNormCache& cache, const Tensor& gamma, const Tensor& dy) {
  const std::size_t ch = cache.invStd.size();
  if (dy.shape() != cache.xhat.shape() || gamma.size() != ch) fail(Errc::kShapeMismatch, "batchnorm backward");
  const std::size_t count = dy.size() / ch;
  BatchNormGrads g{Tensor(dy.shape()), Tensor({ch}), Tensor({ch})};
  const double* gp = dy.data().data();
  const double* hp = cache.xhat.data().data();
  std::vector<double> sumDh(ch, 0.0), sumDhH(ch, 0.0);
  for (std::size_t p = 0; p < count; ++p) {
    for (std::size_t k = 0; k < ch; ++k) {
      const std::size_t i = p * ch + k;
      g.dBeta.flat(k) += gp[i];
      g.dGamma.flat(k) += gp[i] * hp[i];
    }
  }
  for (std::size_t k = 0; k < ch; ++k) {
    sumDh[k] = gamma.flat(k) * g.dBeta.flat(k);
    sumDhH[k] = gamma.flat(k) * g.dGamma.flat(k);
  }
  const double inv = 1.0 / static_cast<double>(count);
  double* dxp = g.dx.data().data();
  for (std::size_t p = 0; p < count; ++p) {
    for (std::size_t k = 0; k < ch; ++k) {
      const std::size_t i = p * ch + k;
      const double dh = gp[i] * gamma.flat(k);
      dxp[i] = cache.invStd[k] * (dh - inv * sumDh[k] - hp[i] * inv * sumDhH[k]);
    }
  }
  return g;
}

Tensor avgPoolForward(const Tensor& x, Extent2 pool) {
  const Dims4 d = spatialDims(x, "avgpool");
  if (pool.rows == 0 || pool.cols == 0 || pool.rows > d.h || pool.cols > d.w) {
    fail(Errc::kPoolTooLarge, "pool " + std::to_string(pool.rows) + "x" + std::to_string(pool.cols) +
                                  " on " + std::to_string(d.h) + "x" + std::to_string(d.w));
  }
  const std::size_t oh = d.h / pool.rows, ow = d.w / pool.cols;
  Tensor out(spatialShape(d, oh, ow, d.c));
  const double scale = 1.0 / static_cast<double>(pool.rows * pool.cols);
  const double* xp = x.data().data();
  double* op = out.data().data();
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        double* y = op + ((n * oh + i) * ow + j) * d.c;
        for (std::size_t a = 0; a < pool.rows; ++a)
          for (std::size_t b = 0; b < pool.cols; ++b)
            axpy(1.0, xp + ((n * d.h + i * pool.rows + a) * d.w + j * pool.cols + b) * d.c, y, d.c);
        for (std::size_t ch = 0; ch < d.c; ++ch) y[ch] *= scale;
      }
    }
  }
  return out;
}

Tensor avgPoolBackward(const Shape& xShape, Extent2 pool, const Tensor& dy) {
  const Tensor probe(xShape);
  const Dims4 d = spatialDims(probe, "avgpool");
  const std::size_t oh = d.h / pool.rows, ow = d.w / pool.cols;
  if (dy.size() != d.n * oh * ow * d.c) fail(Errc::kShapeMismatch, "avgpool output gradient");
  Tensor dx(xShape);
  const double scale = 1.0 / static_cast<double>(pool.rows * pool.cols);
  const double* gp = dy.data().data();
  double* dp = dx.data().data();
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        const double* g = gp + ((n * oh + i) * ow + j) * d.c;
        for (std::size_t a = 0; a < pool.rows; ++a)
          for (std::size_t b = 0; b < pool.cols; ++b)
            axpy(scale, g, dp + ((n * d.h + i * pool.rows + a) * d.w + j * pool.cols + b) * d.c, d.c);
      }
  return dx;
}

Tensor concatFlatten(std::span<const Tensor> parts) {
  if (parts.empty()) fail(Errc::kEmptyInput, "concatFlatten of nothing");
  std::vector<double> out;
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  const std::size_t n = out.size();
  return Tensor({n}, std::move(out));
}

Tensor concatFlattenBatch(std::span<const Tensor> parts) {
  if (parts.empty()) fail(Errc::kEmptyInput, "concatFlatten of nothing");
  const std::size_t n = parts.front().dim(0);
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() == 0 || p.dim(0) != n) fail(Errc::kShapeMismatch, "batch sizes differ in concat");
    total += p.size() / n;
  }
  Tensor out({n, total});
  double* op = out.data().data();
  for (std::size_t s = 0; s < n; ++s) {
    for (const auto& p : parts) {
      const std::size_t per = p.size() / n;
      op = std::copy_n(p.data().data() + s * per, per, op);
    }
  }
  return out;
}

std::vector<Tensor> splitFlattenBatch(const Tensor& d, std::span<const Shape> partShapes) {
  const std::size_t n = d.dim(0);
  std::vector<Tensor> parts;
  std::size_t total = 0;
  for (const auto& s : partShapes) {
    parts.emplace_back(s);
    total += parts.back().size() / n;
  }
  if (total != d.dim(1)) fail(Errc::kShapeMismatch, "split sizes do not cover the feature axis");
  const double* src = d.data().data();
  for (std::size_t s = 0; s < n; ++s) {
    for (auto& p : parts) {
      const std::size_t per = p.size() / n;
      std::copy_n(src, per, p.data().data() + s * per);
      src += per;
    }
  }
  return parts;
}

Tensor dropoutForward(const Tensor& x, double dropProb, Mode mode, Engine& rng, Tensor* mask) {
  if (!(dropProb >= 0.0 && dropProb < 1.0)) fail(Errc::kConfigInvalid, "drop probability must be in [0, 1)");
  if (mode == Mode::kInfer || dropProb == 0.0) {
    if (mask) *mask = Tensor(x.shape(), 1.0);
    return x;
  }
  const double keepScale = 1.0 / (1.0 - dropProb);
  Tensor y(x.shape());
  Tensor m(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = uniform01(rng) < dropProb ? 0.0 : keepScale;
    m.flat(i) = f;
    y.flat(i) = x.flat(i) * f;
  }
  if (mask) *mask = std::move(m);
  return y;
}

Tensor denseForward(const Tensor& x, const Tensor& w, const Tensor& b, Activation activation) {
  if (w.rank() != 2 || (x.rank() != 1 && x.rank() != 2)) fail(Errc::kShapeMismatch, "dense ranks");
  const std::size_t d = w.dim(0), u = w.dim(1);
  const std::size_t n = x.rank() == 2 ? x.dim(0) : 1;
  if (x.size() != n * d || b.size() != u) {
    fail(Errc::kShapeMismatch, "dense x " + shapeString(x.shape()) + " w " + shapeString(w.shape()) + " b " +
                                   shapeString(b.shape()));
  }
  Tensor y(x.rank() == 2 ? Shape{n, u} : Shape{u});
  const double* xp = x.data().data();
  const double* wp = w.data().data();
  for (std::size_t s = 0; s < n; ++s) {
    double* yr = y.data().data() + s * u;
    std::copy_n(b.data().data(), u, yr);
    for (std::size_t i = 0; i < d; ++i) {
      const double xv = xp[s * d + i];
      if (xv != 0.0) axpy(xv, wp + i * u, yr, u);
    }
    if (activation == Activation::kRelu)
      for (std::size_t j = 0; j < u; ++j) yr[j] = yr[j] < 0.0 ? 0.0 : yr[j];
  }
  return y;
}

DenseGrads denseBackward(const Tensor& x, const Tensor& w, const Tensor& dy, bool needInputGrad) {
  const std::size_t d = w.dim(0), u = w.dim(1);
  const std::size_t n = x.size() / d;
  if (x.size() != n * d || dy.size() != n * u) fail(Errc::kShapeMismatch, "dense backward");
  DenseGrads g{needInputGrad ? Tensor(x.shape()) : Tensor(), Tensor(w.shape()), Tensor({u})};
  const double* xp = x.data().data();
  const double* wp = w.data().data();
  double* dwp = g.dW.data().data();
  std::vector<std::size_t> nzIndex;
  std::vector<double> nzValue;
  for (std::size_t s = 0; s < n; ++s) {
    const double* gy = dy.data().data() + s * u;
    nzIndex.clear();
    nzValue.clear();
    for (std::size_t j = 0; j < u; ++j) {
      g.dB.flat(j) += gy[j];
      if (gy[j] != 0.0) {
        nzIndex.push_back(j);
        nzValue.push_back(gy[j]);
      }
    }
    if (nzIndex.empty()) continue;
    // Dropout and ReLU leave most output gradients at zero; walk only the
    // non-zero columns when they are a small fraction.
    const bool sparse = nzIndex.size() * 4 < u;
    const std::size_t nnz = nzIndex.size();
    for (std::size_t i = 0; i < d; ++i) {
      const double xv = xp[s * d + i];
      double* dwr = dwp + i * u;
      const double* wr = wp + i * u;
      if (sparse) {
        double acc = 0.0;
        for (std::size_t k = 0; k < nnz; ++k) {
          const std::size_t j = nzIndex[k];
          if (xv != 0.0) dwr[j] += xv * nzValue[k];
          acc += wr[j] * nzValue[k];
        }
        if (needInputGrad) g.dx.flat(s * d + i) = acc;
      } else {
        if (xv != 0.0) axpy(xv, gy, dwr, u);
        if (needInputGrad) g.dx.flat(s * d + i) = dot(wr, gy, u);
      }
    }
  }
  return g;
}

Tensor reluBackward(const Tensor& y, const Tensor& dy) {
  if (y.shape() != dy.shape()) fail(Errc::kShapeMismatch, "relu backward");
  Tensor dx(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) dx.flat(i) = y.flat(i) > 0.0 ? dy.flat(i) : 0.0;
  return dx;
}

Tensor softmax(const Tensor& logits) {
  const std::size_t k = logits.rank() == 2 ? logits.dim(1) : logits.size();
  const std::size_t n = k ? logits.size() / k : 0;
  Tensor p(logits.shape());
  for (std::size_t s = 0; s < n; ++s) {
    const double* z = logits.data().data() + s * k;
    double* q = p.data().data() + s * k;
    const double mx = *std::max_element(z, z + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += (q[j] = std::exp(z[j] - mx));
    for (std::size_t j = 0; j < k; ++j) q[j] /= sum;
  }
  return p;
}

SoftmaxCrossEntropy softmaxCrossEntropy(const Tensor& logits, int label) {
  const std::size_t k = logits.size();
  if (k < 2) fail(Errc::kShapeMismatch, "softmax needs at least 2 classes");
  if (label < 0 || static_cast<std::size_t>(label) >= k) {
    fail(Errc::kLabelOutOfRange, "label " + std::to_string(label) + " for " + std::to_string(k) + " classes");
  }
  const Tensor flat = reshape(logits, {k});
  SoftmaxCrossEntropy r;
  r.probs = softmax(flat);
  const double mx = *std::max_element(flat.data().begin(), flat.data().end());
  double sum = 0.0;
  for (double z : flat.data()) sum += std::exp(z - mx);
  // log-sum-exp form keeps the loss finite when probs[label] underflows.
  r.loss = -(flat.flat(label) - mx - std::log(sum));
  r.dLogits = r.probs;
  r.dLogits.flat(label) -= 1.0;
  return r;
}

}  // namespace rawcsi::nn
