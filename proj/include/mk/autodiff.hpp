// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mk/attention.hpp"
#include "mk/error.hpp"
#include "mk/tensor.hpp"

namespace mk {

// Reverse-mode tape over a fixed set of matrix ops. Every value is an (m, n)
// f64 matrix; scalars are (1, 1).
class Tape {
 public:
  struct Var {
    std::size_t id = 0;
  };

  // Leaves: parameters (requires_grad) or constants.
  Var leaf(Tensor<double> value, bool requires_grad) {
    require_matrix(value, "leaf");
    return push(std::move(value), requires_grad, {});
  }
  Var constant(Tensor<double> value) { return leaf(std::move(value), false); }

  const Tensor<double>& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  bool has_grad(Var v) const { return !nodes_.at(v.id).grad.storage().empty(); }
  const Tensor<double>& grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (n.grad.storage().empty()) throw UsageError("no gradient recorded for this value");
    return n.grad;
  }
  std::size_t size() const noexcept { return nodes_.size(); }

  // a (m,k) · b (k,n)
  Var matmul(Var a, Var b) {
    Tensor<double> y = mk::matmul(value(a), value(b));
    return push(std::move(y), any_grad({a, b}), [a, b](Tape& t, const Tensor<double>& g) {
      if (t.requires_grad(a)) t.accumulate(a, mk::matmul(g, transpose(t.value(b))));
      if (t.requires_grad(b)) t.accumulate(b, mk::matmul(transpose(t.value(a)), g));
    });
  }

  Var add(Var a, Var b) {
    Tensor<double> y = value(a) + value(b);
    return push(std::move(y), any_grad({a, b}), [a, b](Tape& t, const Tensor<double>& g) {
      if (t.requires_grad(a)) t.accumulate(a, g);
      if (t.requires_grad(b)) t.accumulate(b, g);
    });
  }

  // a (m,n) + r (1,n) broadcast over rows.
  Var add_row(Var a, Var r) {
    const auto& av = value(a);
    const auto& rv = value(r);
    if (rv.extent(0) != 1 || rv.extent(1) != av.extent(1)) throw ShapeError("add_row: bias must be (1, n)");
    Tensor<double> y = av;
    const std::size_t m = av.extent(0), n = av.extent(1);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) y[i * n + j] += rv[j];
    return push(std::move(y), any_grad({a, r}), [a, r](Tape& t, const Tensor<double>& g) {
      if (t.requires_grad(a)) t.accumulate(a, g);
      if (t.requires_grad(r)) t.accumulate(r, column_sum(g));
    });
  }

  Var mul(Var a, Var b) {
    Tensor<double> y = hadamard(value(a), value(b));
    return push(std::move(y), any_grad({a, b}), [a, b](Tape& t, const Tensor<double>& g) {
      if (t.requires_grad(a)) t.accumulate(a, hadamard(g, t.value(b)));
      if (t.requires_grad(b)) t.accumulate(b, hadamard(g, t.value(a)));
    });
  }

  Var scale(Var a, double s) {
    Tensor<double> y = s * value(a);
    return push(std::move(y), any_grad({a}), [a, s](Tape& t, const Tensor<double>& g) { t.accumulate(a, s * g); });
  }

  Var relu(Var a) {
    Tensor<double> y = map(value(a), [](double x) { return x > 0.0 ? x : 0.0; });
    return push(std::move(y), any_grad({a}), [a](Tape& t, const Tensor<double>& g) {
      t.accumulate(a, zip(g, t.value(a), [](double gi, double x) { return x > 0.0 ? gi : 0.0; }));
    });
  }

  // Row-wise x / max(‖x‖, kNormEps).
  Var normalize_rows(Var a) {
    const auto& av = value(a);
    const std::size_t m = av.extent(0), n = av.extent(1);
    Tensor<double> y(av.shape());
    std::vector<double> norms(m);
    for (std::size_t i = 0; i < m; ++i) {
      normalize_row<double>(av.row(i), y.row(i));
      norms[i] = std::sqrt(detail::dot(av.data() + i * n, av.data() + i * n, n));
    }
    const std::size_t out = push(std::move(y), any_grad({a}), {}).id;
    nodes_[out].back = [a, out, norms](Tape& t, const Tensor<double>& g) {
      const auto& yv = t.nodes_[out].value;
      const std::size_t rows = yv.extent(0), cols = yv.extent(1);
      Tensor<double> da(yv.shape());
      for (std::size_t i = 0; i < rows; ++i) {
        const double* yi = yv.data() + i * cols;
        const double* gi = g.data() + i * cols;
        double* di = da.data() + i * cols;
        if (norms[i] > kNormEps) {
          const double yg = detail::dot(yi, gi, cols);
          for (std::size_t p = 0; p < cols; ++p) di[p] = (gi[p] - yi[p] * yg) / norms[i];
        } else {
          for (std::size_t p = 0; p < cols; ++p) di[p] = gi[p] / kNormEps;
        }
      }
      t.accumulate(a, da);
    };
    return {out};
  }

  // Rotates each row by its position; the backward pass rotates back.
  Var rope_rows(Var a, std::vector<double> positions, double base) {
    const auto& av = value(a);
    if (positions.size() != av.extent(0)) throw ShapeError("rope_rows: one position per row required");
    Tensor<double> y = av;
    for (std::size_t i = 0; i < y.extent(0); ++i) rope_rotate_row(y.row(i), positions[i], base);
    return push(std::move(y), any_grad({a}), [a, positions = std::move(positions), base](Tape& t, const Tensor<double>& g) {
      Tensor<double> da = g;
      for (std::size_t i = 0; i < da.extent(0); ++i) rope_rotate_row(da.row(i), -positions[i], base);
      t.accumulate(a, da);
    });
  }

  Var softmax_rows(Var a) {
    const auto& av = value(a);
    const std::size_t m = av.extent(0), n = av.extent(1);
    Tensor<double> y(av.shape());
    for (std::size_t i = 0; i < m; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, av[i * n + j]);
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += (y[i * n + j] = std::exp(av[i * n + j] - mx));
      for (std::size_t j = 0; j < n; ++j) y[i * n + j] /= s;
    }
    const std::size_t out = push(std::move(y), any_grad({a}), {}).id;
    nodes_[out].back = [a, out](Tape& t, const Tensor<double>& g) {
      const auto& yv = t.nodes_[out].value;
      const std::size_t rows = yv.extent(0), cols = yv.extent(1);
      Tensor<double> da(yv.shape());
      for (std::size_t i = 0; i < rows; ++i) {
        const double yg = detail::dot(yv.data() + i * cols, g.data() + i * cols, cols);
        for (std::size_t j = 0; j < cols; ++j) da[i * cols + j] = yv[i * cols + j] * (g[i * cols + j] - yg);
      }
      t.accumulate(a, da);
    };
    return {out};
  }

  Var sum(Var a) {
    Tensor<double> y({1, 1}, mk::sum(value(a)));
    return push(std::move(y), any_grad({a}), [a](Tape& t, const Tensor<double>& g) {
      t.accumulate(a, Tensor<double>(t.value(a).shape(), g[0]));
    });
  }

  Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(value(a).size())); }

  // x ⊙ (1 + γ) + β with γ, β of shape (1, n) broadcast over rows.
  Var adain(Var x, Var gamma, Var beta) {
    const auto& xv = value(x);
    const auto& gv = value(gamma);
    const auto& bv = value(beta);
    const std::size_t m = xv.extent(0), n = xv.extent(1);
    if (gv.shape() != Shape{1, n} || bv.shape() != Shape{1, n}) throw ShapeError("adain: γ and β must be (1, n)");
    Tensor<double> y(xv.shape());
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) y[i * n + j] = xv[i * n + j] * (1.0 + gv[j]) + bv[j];
    return push(std::move(y), any_grad({x, gamma, beta}), [x, gamma, beta](Tape& t, const Tensor<double>& g) {
      const auto& xv = t.value(x);
      const auto& gv = t.value(gamma);
      const std::size_t m = xv.extent(0), n = xv.extent(1);
      if (t.requires_grad(x)) {
        Tensor<double> dx(xv.shape());
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) dx[i * n + j] = g[i * n + j] * (1.0 + gv[j]);
        t.accumulate(x, dx);
      }
      if (t.requires_grad(gamma)) {
        Tensor<double> dg({1, n});
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) dg[j] += g[i * n + j] * xv[i * n + j];
        t.accumulate(gamma, dg);
      }
      if (t.requires_grad(beta)) t.accumulate(beta, column_sum(g));
    });
  }

  // Mean over elements of (a - target)²; target is not differentiated.
  Var mse(Var a, const Tensor<double>& target) {
    require_same_shape(value(a), target, "mse");
    double s = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double e = value(a)[i] - target[i];
      s += e * e;
    }
    Tensor<double> y({1, 1}, s / static_cast<double>(target.size()));
    return push(std::move(y), any_grad({a}), [a, target](Tape& t, const Tensor<double>& g) {
      const double k = 2.0 * g[0] / static_cast<double>(target.size());
      t.accumulate(a, zip(t.value(a), target, [k](double x, double y) { return k * (x - y); }));
    });
  }

  Var slice_rows(Var a, std::size_t begin, std::size_t end) {
    const auto& av = value(a);
    if (begin >= end || end > av.extent(0)) throw ShapeError("slice_rows: bad row range");
    const std::size_t n = av.extent(1);
    Tensor<double> y({end - begin, n});
    std::copy_n(av.data() + begin * n, (end - begin) * n, y.data());
    return push(std::move(y), any_grad({a}), [a, begin](Tape& t, const Tensor<double>& g) {
      Tensor<double> da(t.value(a).shape());
      std::copy_n(g.data(), g.size(), da.data() + begin * g.extent(1));
      t.accumulate(a, da);
    });
  }

  // Linear attention restricted to row groups:
  //   out_i = (offset·Σv_j + φq_i·S) / (offset·|G| + φq_i·z + den_eps),
  //   S = Σ_{j∈G} φk_jᵀ v_j, z = Σ_{j∈G} φk_j,
  // where φq, φk are the (already feature-mapped) inputs. Every row must belong
  // to exactly one group.
  Var linear_attention(Var q, Var k, Var v, std::vector<std::vector<std::size_t>> groups, double offset,
                       double den_eps) {
    const auto& qv = value(q);
    const auto& kv = value(k);
    const auto& vv = value(v);
    const std::size_t rows = qv.extent(0), d = qv.extent(1), dv = vv.extent(1);
    if (kv.shape() != qv.shape() || vv.extent(0) != rows) throw ShapeError("linear_attention: shape mismatch");
    Tensor<double> y({rows, dv});
    std::vector<double> den(rows);
    for (const auto& grp : groups) {
      const GroupSums s = group_sums(kv, vv, grp);
      const double n = static_cast<double>(grp.size());
      for (std::size_t i : grp) {
        const double* qi = qv.data() + i * d;
        const double dn = offset * n + detail::dot(qi, s.z.data(), d) + den_eps;
        if (!(dn > 0.0)) throw DegenerateSimilarityError(i, dn);
        den[i] = dn;
        double* yi = y.data() + i * dv;
        for (std::size_t c = 0; c < dv; ++c) yi[c] = offset * s.vsum[c];
        for (std::size_t p = 0; p < d; ++p)
          for (std::size_t c = 0; c < dv; ++c) yi[c] += qi[p] * s.s[p * dv + c];
        for (std::size_t c = 0; c < dv; ++c) yi[c] /= dn;
      }
    }
    const std::size_t out = push(std::move(y), any_grad({q, k, v}), {}).id;
    nodes_[out].back = [q, k, v, out, groups = std::move(groups), den = std::move(den), offset](
                           Tape& t, const Tensor<double>& g) {
      const auto& qv = t.value(q);
      const auto& kv = t.value(k);
      const auto& vv = t.value(v);
      const auto& yv = t.nodes_[out].value;
      const std::size_t d = qv.extent(1), dv = vv.extent(1);
      Tensor<double> dq(qv.shape()), dk(kv.shape()), dvv(vv.shape());
      std::vector<double> dnum(dv);
      for (const auto& grp : groups) {
        const GroupSums s = group_sums(kv, vv, grp);
        std::vector<double> dS(d * dv), dz(d), dvsum(dv);
        for (std::size_t i : grp) {
          const double* gi = g.data() + i * dv;
          const double* yi = yv.data() + i * dv;
          const double* qi = qv.data() + i * d;
          for (std::size_t c = 0; c < dv; ++c) dnum[c] = gi[c] / den[i];
          const double dden = -detail::dot(gi, yi, dv) / den[i];
          double* dqi = dq.data() + i * d;
          for (std::size_t p = 0; p < d; ++p) {
            dqi[p] = detail::dot(s.s.data() + p * dv, dnum.data(), dv) + dden * s.z[p];
            for (std::size_t c = 0; c < dv; ++c) dS[p * dv + c] += qi[p] * dnum[c];
            dz[p] += dden * qi[p];
          }
          for (std::size_t c = 0; c < dv; ++c) dvsum[c] += offset * dnum[c];
        }
        for (std::size_t j : grp) {
          const double* kj = kv.data() + j * d;
          const double* vj = vv.data() + j * dv;
          double* dkj = dk.data() + j * d;
          double* dvj = dvv.data() + j * dv;
          for (std::size_t p = 0; p < d; ++p) dkj[p] = detail::dot(dS.data() + p * dv, vj, dv) + dz[p];
          for (std::size_t c = 0; c < dv; ++c) dvj[c] = dvsum[c];
          for (std::size_t p = 0; p < d; ++p)
            for (std::size_t c = 0; c < dv; ++c) dvj[c] += kj[p] * dS[p * dv + c];
        }
      }
      if (t.requires_grad(q)) t.accumulate(q, dq);
      if (t.requires_grad(k)) t.accumulate(k, dk);
      if (t.requires_grad(v)) t.accumulate(v, dvv);
    };
    return {out};
  }

  // Reverse sweep from a (1,1) output. A tape can be swept once.
  void backward(Var loss) {
    if (swept_) throw UsageError("tape already replayed; record a new forward pass");
    swept_ = true;
    Node& root = nodes_.at(loss.id);
    if (root.value.size() != 1) throw UsageError("backward needs a scalar output");
    if (!root.requires_grad) return;
    root.grad = Tensor<double>(root.value.shape(), 1.0);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.back || n.grad.storage().empty()) continue;
      const Tensor<double> g = n.grad;
      n.back(*this, g);
    }
  }

 private:
  using Backward = std::function<void(Tape&, const Tensor<double>&)>;

  struct Node {
    Tensor<double> value;
    bool requires_grad = false;
    Backward back;
    Tensor<double> grad;
  };

  struct GroupSums {
    std::vector<double> s, z, vsum;
  };

  static void require_matrix(const Tensor<double>& t, const char* what) {
    if (t.rank() != 2) throw ShapeError(std::string(what) + ": tape values are matrices");
  }

  static Tensor<double> column_sum(const Tensor<double>& g) {
    const std::size_t m = g.extent(0), n = g.extent(1);
    Tensor<double> r({1, n});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) r[j] += g[i * n + j];
    return r;
  }

  static GroupSums group_sums(const Tensor<double>& k, const Tensor<double>& v, const std::vector<std::size_t>& grp) {
    const std::size_t d = k.extent(1), dv = v.extent(1);
    GroupSums s{std::vector<double>(d * dv), std::vector<double>(d), std::vector<double>(dv)};
    for (std::size_t j : grp) {
      const double* kj = k.data() + j * d;
      const double* vj = v.data() + j * dv;
      for (std::size_t p = 0; p < d; ++p) {
        for (std::size_t c = 0; c < dv; ++c) s.s[p * dv + c] += kj[p] * vj[c];
        s.z[p] += kj[p];
      }
      for (std::size_t c = 0; c < dv; ++c) s.vsum[c] += vj[c];
    }
    return s;
  }

  bool any_grad(std::initializer_list<Var> vs) const {
    for (Var v : vs)
      if (requires_grad(v)) return true;
    return false;
  }

  Var push(Tensor<double> value, bool requires_grad, Backward back) {
    if (swept_) throw UsageError("cannot record onto a replayed tape");
    nodes_.push_back(Node{std::move(value), requires_grad, requires_grad ? std::move(back) : Backward{}, {}});
    return {nodes_.size() - 1};
  }

  void accumulate(Var v, const Tensor<double>& g) {
    Node& n = nodes_[v.id];
    if (!n.requires_grad) return;
    if (n.grad.storage().empty()) {
      n.grad = g;
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
    }
  }

  std::vector<Node> nodes_;
  bool swept_ = false;
};

}  // namespace mk
