// Copyright (c) the ICAE Project Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "icae/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "icae/error.hpp"
#include "icae/kernels.hpp"

namespace icae {
namespace {

void accumulate(Node& node, const Tensor& delta) {
  Tensor& g = grad_buffer(node);
  require(g.shape() == delta.shape(), ErrorKind::kShapeMismatch,
          "gradient " + delta.shape().str() + " for node '" + node.op +
              "' of shape " + g.shape().str());
  for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += delta[i];
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  require(a.shape() == b.shape(), ErrorKind::kShapeMismatch,
          std::string(op) + ": shapes " + a.shape().str() + " and " +
              b.shape().str() + " differ");
}

void check_channel_vector(const Var& v, std::int64_t channels,
                          const char* op) {
  require(v.shape() == Shape{1, channels, 1, 1}, ErrorKind::kShapeMismatch,
          std::string(op) + ": expected per-channel parameter of shape " +
              Shape{1, channels, 1, 1}.str() + ", got " + v.shape().str());
}

template <typename Forward, typename Derivative>
Var unary(const Var& x, const char* op, Forward f, Derivative df) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::int64_t i = 0; i < in.numel(); ++i) out[i] = f(in[i]);
  return make_result(std::move(out), {x}, op, [df](Node& self) {
    Node& in_node = *self.inputs[0];
    if (!in_node.requires_grad) return;
    Tensor& g = grad_buffer(in_node);
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      g[i] += self.grad[i] * df(in_node.value[i]);
    }
  });
}

double normal_pdf(double t) {
  return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
}

// Upper tail 1 - Phi(t), accurate for large t.
double normal_upper_tail(double t) {
  return 0.5 * std::erfc(t / std::numbers::sqrt2);
}

double sigmoid(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

double gaussian_bin(double y, double s) {
  const double a = std::abs(y);
  return normal_upper_tail((a - 0.5) / s) - normal_upper_tail((a + 0.5) / s);
}

double logistic_bin(double d, double s) {
  if (d > 0) return sigmoid(-(d - 0.5) / s) - sigmoid(-(d + 0.5) / s);
  return sigmoid((d + 0.5) / s) - sigmoid((d - 0.5) / s);
}

enum class NormKind { kDivisive, kMultiplicative };

// norm[n, c, p] = beta_c + sum_k gamma[c, k] x[n, k, p]^2
Tensor gdn_norm(const Tensor& x, const Tensor& beta, const Tensor& gamma) {
  const Shape& s = x.shape();
  const std::int64_t plane = s.plane();
  Tensor norm(s);
  std::vector<Real> sq(static_cast<std::size_t>(s.c * plane));
  for (std::int64_t n = 0; n < s.n; ++n) {
    const Real* xn = x.ptr() + n * s.c * plane;
    for (std::int64_t i = 0; i < s.c * plane; ++i) sq[i] = xn[i] * xn[i];
    for (std::int64_t c = 0; c < s.c; ++c) {
      Real* out = norm.ptr() + (n * s.c + c) * plane;
      std::fill(out, out + plane, beta[c]);
      for (std::int64_t k = 0; k < s.c; ++k) {
        const Real g = gamma[c * s.c + k];
        const Real* sk = sq.data() + k * plane;
        for (std::int64_t p = 0; p < plane; ++p) out[p] += g * sk[p];
      }
    }
  }
  return norm;
}

Var normalization(const Var& x, const Var& beta, const Var& gamma,
                  NormKind kind) {
  const char* op = kind == NormKind::kDivisive ? "gdn" : "igdn";
  const Shape& s = x.shape();
  check_channel_vector(beta, s.c, op);
  require(gamma.shape() == Shape{1, 1, s.c, s.c}, ErrorKind::kShapeMismatch,
          std::string(op) + ": gamma " + gamma.shape().str() +
              " does not match " + std::to_string(s.c) + " channels");
  for (std::int64_t c = 0; c < s.c; ++c) {
    require(beta.value()[c] > 0, ErrorKind::kInvalidArgument,
            std::string(op) + ": beta must be positive");
  }
  const Tensor norm = gdn_norm(x.value(), beta.value(), gamma.value());
  Tensor out(s);
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    const Real root = std::sqrt(norm[i]);
    out[i] = kind == NormKind::kDivisive ? x.value()[i] / root
                                         : x.value()[i] * root;
  }
  return make_result(std::move(out), {x, beta, gamma}, op, [kind](Node& self) {
    Node& xn = *self.inputs[0];
    Node& bn = *self.inputs[1];
    Node& gn = *self.inputs[2];
    const Tensor& x = xn.value;
    const Tensor& gamma = gn.value;
    const Shape& s = x.shape();
    const std::int64_t plane = s.plane();
    const Tensor norm = gdn_norm(x, bn.value, gamma);
    // w = g x norm^{-3/2} (divisive) or g x norm^{-1/2} (multiplicative)
    Tensor w(s);
    Tensor dx(s);
    for (std::int64_t i = 0; i < w.numel(); ++i) {
      const double nv = norm[i];
      const double root = std::sqrt(nv);
      if (kind == NormKind::kDivisive) {
        w[i] = static_cast<Real>(self.grad[i] * x[i] / (nv * root));
        dx[i] = static_cast<Real>(self.grad[i] / root);
      } else {
        w[i] = static_cast<Real>(self.grad[i] * x[i] / root);
        dx[i] = static_cast<Real>(self.grad[i] * root);
      }
    }
    const double sign = kind == NormKind::kDivisive ? -1.0 : 1.0;
    if (xn.requires_grad) {
      for (std::int64_t n = 0; n < s.n; ++n) {
        for (std::int64_t j = 0; j < s.c; ++j) {
          std::vector<double> mix(static_cast<std::size_t>(plane), 0.0);
          for (std::int64_t c = 0; c < s.c; ++c) {
            const double gcj = gamma[c * s.c + j];
            const Real* wc = w.ptr() + (n * s.c + c) * plane;
            for (std::int64_t p = 0; p < plane; ++p) mix[p] += gcj * wc[p];
          }
          Real* d = dx.ptr() + (n * s.c + j) * plane;
          const Real* xj = x.ptr() + (n * s.c + j) * plane;
          for (std::int64_t p = 0; p < plane; ++p) {
            d[p] = static_cast<Real>(d[p] + sign * xj[p] * mix[p]);
          }
        }
      }
      accumulate(xn, dx);
    }
    if (bn.requires_grad) {
      Tensor db = kernels::channel_sum(w);
      for (std::int64_t c = 0; c < s.c; ++c) {
        db[c] = static_cast<Real>(0.5 * sign * db[c]);
      }
      accumulate(bn, db);
    }
    if (gn.requires_grad) {
      Tensor dg(gamma.shape());
      std::vector<double> acc(static_cast<std::size_t>(s.c * s.c), 0.0);
      for (std::int64_t n = 0; n < s.n; ++n) {
        for (std::int64_t c = 0; c < s.c; ++c) {
          const Real* wc = w.ptr() + (n * s.c + c) * plane;
          for (std::int64_t k = 0; k < s.c; ++k) {
            const Real* xk = x.ptr() + (n * s.c + k) * plane;
            double a = 0.0;
            for (std::int64_t p = 0; p < plane; ++p) {
              a += static_cast<double>(wc[p]) * xk[p] * xk[p];
            }
            acc[c * s.c + k] += a;
          }
        }
      }
      for (std::int64_t i = 0; i < dg.numel(); ++i) {
        dg[i] = static_cast<Real>(0.5 * sign * acc[i]);
      }
      accumulate(gn, dg);
    }
  });
}

}  // namespace

Var conv2d(const Var& input, const Var& kernel, const Var& bias, int stride,
           int pad) {
  const kernels::ConvGeometry geometry{stride, pad};
  Tensor out = kernels::conv2d_forward(input.value(), kernel.value(), geometry);
  check_channel_vector(bias, kernel.shape().n, "conv2d");
  kernels::add_channel_bias(out, bias.value());
  return make_result(
      std::move(out), {input, kernel, bias}, "conv2d", [geometry](Node& self) {
        Node& xn = *self.inputs[0];
        Node& kn = *self.inputs[1];
        Node& bn = *self.inputs[2];
        if (xn.requires_grad) {
          accumulate(xn, kernels::conv2d_backward_input(
                             self.grad, kn.value, geometry, xn.value.shape()));
        }
        if (kn.requires_grad) {
          accumulate(kn, kernels::conv2d_backward_kernel(
                             xn.value, self.grad, geometry, kn.value.shape()));
        }
        if (bn.requires_grad) accumulate(bn, kernels::channel_sum(self.grad));
      });
}

Var conv_transpose2d(const Var& input, const Var& kernel, const Var& bias,
                     int stride, int pad, int output_padding) {
  const Shape& is = input.shape();
  const Shape& ks = kernel.shape();
  require(ks.n == is.c && ks.h == ks.w, ErrorKind::kShapeMismatch,
          "conv_transpose2d: kernel " + ks.str() + " does not match input " +
              is.str());
  require(stride > 0 && pad >= 0 && output_padding >= 0 &&
              output_padding < stride,
          ErrorKind::kInvalidArgument,
          "conv_transpose2d: invalid stride, padding or output padding");
  check_channel_vector(bias, ks.c, "conv_transpose2d");
  const int k = static_cast<int>(ks.h);
  const Shape out_shape{
      is.n, ks.c,
      kernels::conv_transpose_output_extent(is.h, k, stride, pad,
                                            output_padding),
      kernels::conv_transpose_output_extent(is.w, k, stride, pad,
                                            output_padding)};
  require(out_shape.h > 0 && out_shape.w > 0, ErrorKind::kShapeMismatch,
          "conv_transpose2d: empty output for input " + is.str());
  const kernels::ConvGeometry geometry{stride, pad};
  Tensor out = kernels::conv2d_backward_input(input.value(), kernel.value(),
                                              geometry, out_shape);
  kernels::add_channel_bias(out, bias.value());
  return make_result(
      std::move(out), {input, kernel, bias}, "conv_transpose2d",
      [geometry](Node& self) {
        Node& xn = *self.inputs[0];
        Node& kn = *self.inputs[1];
        Node& bn = *self.inputs[2];
        if (xn.requires_grad) {
          accumulate(xn,
                     kernels::conv2d_forward(self.grad, kn.value, geometry));
        }
        if (kn.requires_grad) {
          accumulate(kn, kernels::conv2d_backward_kernel(
                             self.grad, xn.value, geometry, kn.value.shape()));
        }
        if (bn.requires_grad) accumulate(bn, kernels::channel_sum(self.grad));
      });
}

Var gdn(const Var& x, const Var& beta, const Var& gamma) {
  return normalization(x, beta, gamma, NormKind::kDivisive);
}

Var igdn(const Var& x, const Var& beta, const Var& gamma) {
  return normalization(x, beta, gamma, NormKind::kMultiplicative);
}

Var relu(const Var& x) {
  return unary(
      x, "relu", [](Real v) { return v > 0 ? v : Real(0); },
      [](Real v) { return v > 0 ? Real(1) : Real(0); });
}

Var abs(const Var& x) {
  return unary(
      x, "abs", [](Real v) { return std::abs(v); },
      [](Real v) { return v > 0 ? Real(1) : (v < 0 ? Real(-1) : Real(0)); });
}

Var softplus(const Var& x) {
  return unary(
      x, "softplus",
      [](Real v) {
        const double d = v;
        return static_cast<Real>(d > 0 ? d + std::log1p(std::exp(-d))
                                       : std::log1p(std::exp(d)));
      },
      [](Real v) { return static_cast<Real>(sigmoid(v)); });
}

Var square_plus(const Var& raw, Real floor) {
  return unary(
      raw, "square_plus", [floor](Real v) { return v * v + floor; },
      [](Real v) { return 2 * v; });
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    out[i] = a.value()[i] + b.value()[i];
  }
  return make_result(std::move(out), {a, b}, "add", [](Node& self) {
    for (auto& in : self.inputs) {
      if (in->requires_grad) accumulate(*in, self.grad);
    }
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    out[i] = a.value()[i] - b.value()[i];
  }
  return make_result(std::move(out), {a, b}, "sub", [](Node& self) {
    if (self.inputs[0]->requires_grad) accumulate(*self.inputs[0], self.grad);
    if (self.inputs[1]->requires_grad) {
      Tensor neg = self.grad;
      for (std::int64_t i = 0; i < neg.numel(); ++i) neg[i] = -neg[i];
      accumulate(*self.inputs[1], neg);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    out[i] = a.value()[i] * b.value()[i];
  }
  return make_result(std::move(out), {a, b}, "mul", [](Node& self) {
    for (int side = 0; side < 2; ++side) {
      Node& in = *self.inputs[side];
      if (!in.requires_grad) continue;
      const Tensor& other = self.inputs[1 - side]->value;
      Tensor d(self.grad.shape());
      for (std::int64_t i = 0; i < d.numel(); ++i) d[i] = self.grad[i] * other[i];
      accumulate(in, d);
    }
  });
}

Var scale(const Var& a, double factor) {
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    out[i] = static_cast<Real>(a.value()[i] * factor);
  }
  return make_result(std::move(out), {a}, "scale", [factor](Node& self) {
    Tensor d(self.grad.shape());
    for (std::int64_t i = 0; i < d.numel(); ++i) {
      d[i] = static_cast<Real>(self.grad[i] * factor);
    }
    accumulate(*self.inputs[0], d);
  });
}

Var square(const Var& a) {
  return unary(
      a, "square", [](Real v) { return v * v; }, [](Real v) { return 2 * v; });
}

Var sum(const Var& a) {
  double acc = 0.0;
  for (const Real v : a.value().data()) acc += v;
  return make_result(Tensor(scalar_shape(), static_cast<Real>(acc)), {a},
                     "sum", [](Node& self) {
                       Node& in = *self.inputs[0];
                       accumulate(in, Tensor(in.value.shape(), self.grad[0]));
                     });
}

Var mean(const Var& a) {
  const auto count = static_cast<double>(a.value().numel());
  require(count > 0, ErrorKind::kInvalidArgument, "mean of an empty tensor");
  return scale(sum(a), 1.0 / count);
}

Var mean_squared_error(const Var& a, const Var& b) {
  return mean(square(sub(a, b)));
}

Var add_uniform_noise(const Var& x, Rng& rng) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::int64_t i = 0; i < in.numel(); ++i) {
    const Real v = in[i];
    Real r = v + (rng.uniform_double() - 0.5);
    // Keep the realized offset inside [-0.5, 0.5) after float rounding.
    while (r - v >= Real(0.5)) r = std::nextafter(r, -INFINITY);
    while (r - v < Real(-0.5)) r = std::nextafter(r, INFINITY);
    out[i] = r;
  }
  return make_result(std::move(out), {x}, "uniform_noise", [](Node& self) {
    accumulate(*self.inputs[0], self.grad);
  });
}

Var gaussian_likelihood(const Var& y, const Var& sigma, double scale_floor,
                        double prob_floor) {
  check_same_shape(y, sigma, "gaussian_likelihood");
  require(scale_floor > 0, ErrorKind::kInvalidArgument,
          "gaussian_likelihood: scale floor must be positive");
  const Tensor& yv = y.value();
  const Tensor& sv = sigma.value();
  Tensor out(yv.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    const double s = std::max<double>(sv[i], scale_floor);
    out[i] = static_cast<Real>(std::max(gaussian_bin(yv[i], s), prob_floor));
  }
  return make_result(
      std::move(out), {y, sigma}, "gaussian_likelihood",
      [scale_floor, prob_floor](Node& self) {
        Node& yn = *self.inputs[0];
        Node& sn = *self.inputs[1];
        Tensor dy(yn.value.shape());
        Tensor ds(sn.value.shape());
        for (std::int64_t i = 0; i < dy.numel(); ++i) {
          const double yv = yn.value[i];
          const double raw_s = sn.value[i];
          const double s = std::max(raw_s, scale_floor);
          if (gaussian_bin(yv, s) <= prob_floor) continue;
          const double u = (yv + 0.5) / s;
          const double l = (yv - 0.5) / s;
          const double pu = normal_pdf(u);
          const double pl = normal_pdf(l);
          const double g = self.grad[i];
          dy[i] = static_cast<Real>(g * (pu - pl) / s);
          if (raw_s > scale_floor) {
            ds[i] = static_cast<Real>(g * (pl * l - pu * u) / s);
          }
        }
        if (yn.requires_grad) accumulate(yn, dy);
        if (sn.requires_grad) accumulate(sn, ds);
      });
}

Var logistic_likelihood(const Var& z, const Var& loc, const Var& log_scale,
                        double prob_floor) {
  const Shape& s = z.shape();
  check_channel_vector(loc, s.c, "logistic_likelihood");
  check_channel_vector(log_scale, s.c, "logistic_likelihood");
  Tensor out(s);
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      const double mu = loc.value()[c];
      const double sc = std::exp(static_cast<double>(log_scale.value()[c]));
      for (std::int64_t p = 0; p < s.plane(); ++p) {
        const std::int64_t i = (n * s.c + c) * s.plane() + p;
        out[i] = static_cast<Real>(
            std::max(logistic_bin(z.value()[i] - mu, sc), prob_floor));
      }
    }
  }
  return make_result(
      std::move(out), {z, loc, log_scale}, "logistic_likelihood",
      [prob_floor](Node& self) {
        Node& zn = *self.inputs[0];
        Node& ln = *self.inputs[1];
        Node& sn = *self.inputs[2];
        const Shape& s = zn.value.shape();
        Tensor dz(s);
        std::vector<double> dloc(static_cast<std::size_t>(s.c), 0.0);
        std::vector<double> dls(static_cast<std::size_t>(s.c), 0.0);
        for (std::int64_t n = 0; n < s.n; ++n) {
          for (std::int64_t c = 0; c < s.c; ++c) {
            const double mu = ln.value[c];
            const double sc = std::exp(static_cast<double>(sn.value[c]));
            for (std::int64_t p = 0; p < s.plane(); ++p) {
              const std::int64_t i = (n * s.c + c) * s.plane() + p;
              const double d = zn.value[i] - mu;
              if (logistic_bin(d, sc) <= prob_floor) continue;
              const double u = (d + 0.5) / sc;
              const double l = (d - 0.5) / sc;
              const double du = sigmoid(u) * sigmoid(-u);
              const double dl = sigmoid(l) * sigmoid(-l);
              const double g = self.grad[i];
              const double dpdz = (du - dl) / sc;
              dz[i] = static_cast<Real>(g * dpdz);
              dloc[c] -= g * dpdz;
              dls[c] += g * (dl * l - du * u);
            }
          }
        }
        if (zn.requires_grad) accumulate(zn, dz);
        Tensor tl(Shape{1, s.c, 1, 1});
        Tensor ts(Shape{1, s.c, 1, 1});
        for (std::int64_t c = 0; c < s.c; ++c) {
          tl[c] = static_cast<Real>(dloc[c]);
          ts[c] = static_cast<Real>(dls[c]);
        }
        if (ln.requires_grad) accumulate(ln, tl);
        if (sn.requires_grad) accumulate(sn, ts);
      });
}

Var bits(const Var& probs) {
  double acc = 0.0;
  for (const Real p : probs.value().data()) {
    require(p > 0 && p <= 1, ErrorKind::kInvalidArgument,
            "bits: probability " + std::to_string(p) + " outside (0, 1]");
    acc -= std::log2(static_cast<double>(p));
  }
  return make_result(
      Tensor(scalar_shape(), static_cast<Real>(acc)), {probs}, "bits",
      [](Node& self) {
        Node& in = *self.inputs[0];
        Tensor d(in.value.shape());
        const double g = self.grad[0];
        for (std::int64_t i = 0; i < d.numel(); ++i) {
          d[i] = static_cast<Real>(-g / (in.value[i] * std::numbers::ln2));
        }
        accumulate(in, d);
      });
}

}  // namespace icae
