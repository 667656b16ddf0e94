#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wqed/basis.hpp"
#include "wqed/operators.hpp"
#include "wqed/state.hpp"

namespace wqed {

namespace detail {

/// Collects the flat indices an operator may read or write at the current
/// active bin. Deduplication runs through the caller-owned `seen` mask so a
/// whole tree can be collected without sorting.
struct SupportSink {
  std::vector<std::uint32_t>& idx;
  std::vector<std::uint8_t>& seen;
  bool full = false;

  void add(std::size_t i) {
    if (!seen[i]) {
      seen[i] = 1;
      idx.push_back(static_cast<std::uint32_t>(i));
    }
  }
  void mark_full() { full = true; }
};

class OpNode {
public:
  virtual ~OpNode() = default;
  virtual std::unique_ptr<OpNode> clone() const = 0;
  virtual const CompositeBasis& basis() const = 0;

  /// out += alpha * Op * in over the full composite space.
  virtual void apply_add(complex alpha, std::span<const complex> in,
                         std::span<complex> out) = 0;

  /// Strided apply for operators living on a single factor; used by tensor
  /// nodes to act on subspaces. Multi-factor nodes must not be asked.
  virtual void apply_slice_add(complex alpha, const complex* in, std::size_t in_stride,
                               complex* out, std::size_t out_stride) = 0;

  virtual void set_active_bin(int) {}
  /// Largest admissible active bin across kernels in the subtree.
  virtual int max_active_bin() const { return std::numeric_limits<int>::max(); }
  virtual bool has_kernel() const { return false; }

  virtual void collect_support(SupportSink& sink) const = 0;
  /// Appends the factor-local indices the node may write (rows) and read
  /// (cols); duplicates are allowed (consumers deduplicate through a mask).
  virtual void collect_factor_rows_cols(std::vector<std::uint32_t>& rows,
                                        std::vector<std::uint32_t>& cols) const = 0;

  /// Explicit sorted/deduplicated matrix entries at the current bin.
  virtual void enumerate_entries(std::vector<Triplet>& out) const = 0;

  /// Bytes of persistent operator data (coefficients, local matrices, kernel
  /// parameters). Workspace scratch is excluded; it is not part of the
  /// operator's representation.
  virtual std::size_t operator_bytes() const = 0;
};

/// Combines raw triplets into the canonical sorted, deduplicated, zero-free
/// form.
inline void canonicalize(std::vector<Triplet>& t) {
  std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::size_t w = 0;
  for (std::size_t r = 0; r < t.size(); ++r) {
    if (w > 0 && t[w - 1].row == t[r].row && t[w - 1].col == t[r].col) {
      t[w - 1].value += t[r].value;
    } else {
      t[w] = t[r];
      ++w;
    }
  }
  t.resize(w);
  t.erase(std::remove_if(t.begin(), t.end(),
                         [](const Triplet& x) { return x.value == complex(0.0, 0.0); }),
          t.end());
}

class KernelLeaf final : public OpNode {
public:
  KernelLeaf(WaveguideKernelOp op) : op_(std::move(op)), basis_(op_.basis()) {}

  std::unique_ptr<OpNode> clone() const override { return std::make_unique<KernelLeaf>(*this); }
  const CompositeBasis& basis() const override { return basis_; }
  WaveguideKernelOp& kernel() { return op_; }
  const WaveguideKernelOp& kernel() const { return op_; }

  void apply_add(complex alpha, std::span<const complex> in, std::span<complex> out) override {
    op_.apply_slice_add(alpha, in.data(), 1, out.data(), 1);
  }
  void apply_slice_add(complex alpha, const complex* in, std::size_t in_stride, complex* out,
                       std::size_t out_stride) override {
    op_.apply_slice_add(alpha, in, in_stride, out, out_stride);
  }
  void set_active_bin(int k) override { op_.set_active_bin(k); }
  int max_active_bin() const override { return op_.max_active_bin(); }
  bool has_kernel() const override { return true; }

  void collect_support(SupportSink& sink) const override {
    op_.for_each_entry([&](std::size_t r, std::size_t c, double) {
      sink.add(r);
      sink.add(c);
    });
  }
  void collect_factor_rows_cols(std::vector<std::uint32_t>& rows,
                                std::vector<std::uint32_t>& cols) const override {
    op_.collect_factor_rows_cols(rows, cols);
  }
  void enumerate_entries(std::vector<Triplet>& out) const override {
    op_.enumerate_entries(out);
    canonicalize(out);
  }
  std::size_t operator_bytes() const override { return sizeof(WaveguideKernelOp); }

private:
  WaveguideKernelOp op_;
  CompositeBasis basis_;
};

class LocalLeaf final : public OpNode {
public:
  LocalLeaf(LocalOp op) : op_(std::move(op)), basis_(op_.basis()) {}

  std::unique_ptr<OpNode> clone() const override { return std::make_unique<LocalLeaf>(*this); }
  const CompositeBasis& basis() const override { return basis_; }
  const LocalOp& local() const { return op_; }

  void apply_add(complex alpha, std::span<const complex> in, std::span<complex> out) override {
    op_.apply_slice_add(alpha, in.data(), 1, out.data(), 1);
  }
  void apply_slice_add(complex alpha, const complex* in, std::size_t in_stride, complex* out,
                       std::size_t out_stride) override {
    op_.apply_slice_add(alpha, in, in_stride, out, out_stride);
  }
  void collect_support(SupportSink& sink) const override {
    std::vector<std::uint32_t> rows, cols;
    op_.collect_factor_rows_cols(rows, cols);
    for (std::uint32_t i : rows) sink.add(i);
    for (std::uint32_t i : cols) sink.add(i);
  }
  void collect_factor_rows_cols(std::vector<std::uint32_t>& rows,
                                std::vector<std::uint32_t>& cols) const override {
    op_.collect_factor_rows_cols(rows, cols);
  }
  void enumerate_entries(std::vector<Triplet>& out) const override {
    op_.enumerate_entries(out);
    canonicalize(out);
  }
  std::size_t operator_bytes() const override {
    return sizeof(LocalOp) + op_.dim() * op_.dim() * sizeof(complex);
  }

private:
  LocalOp op_;
  CompositeBasis basis_;
};

class ScaledNode final : public OpNode {
public:
  ScaledNode(complex factor, std::unique_ptr<OpNode> child)
      : factor_(factor), child_(std::move(child)) {}
  ScaledNode(const ScaledNode& o) : factor_(o.factor_), child_(o.child_->clone()) {}

  std::unique_ptr<OpNode> clone() const override { return std::make_unique<ScaledNode>(*this); }
  const CompositeBasis& basis() const override { return child_->basis(); }

  void apply_add(complex alpha, std::span<const complex> in, std::span<complex> out) override {
    child_->apply_add(alpha * factor_, in, out);
  }
  void apply_slice_add(complex alpha, const complex* in, std::size_t in_stride, complex* out,
                       std::size_t out_stride) override {
    child_->apply_slice_add(alpha * factor_, in, in_stride, out, out_stride);
  }
  void set_active_bin(int k) override { child_->set_active_bin(k); }
  int max_active_bin() const override { return child_->max_active_bin(); }
  bool has_kernel() const override { return child_->has_kernel(); }
  void collect_support(SupportSink& sink) const override { child_->collect_support(sink); }
  void collect_factor_rows_cols(std::vector<std::uint32_t>& rows,
                                std::vector<std::uint32_t>& cols) const override {
    child_->collect_factor_rows_cols(rows, cols);
  }
  void enumerate_entries(std::vector<Triplet>& out) const override {
    child_->enumerate_entries(out);
    for (Triplet& t : out) t.value *= factor_;
    canonicalize(out);
  }
  std::size_t operator_bytes() const override {
    return sizeof(complex) + child_->operator_bytes();
  }

private:
  complex factor_;
  std::unique_ptr<OpNode> child_;
};

class SumNode final : public OpNode {
public:
  explicit SumNode(std::vector<std::unique_ptr<OpNode>> children)
      : children_(std::move(children)) {
    if (children_.empty()) throw std::invalid_argument("lazy_sum: no operands");
    for (const auto& c : children_)
      if (c->basis() != children_.front()->basis())
        throw std::invalid_argument("lazy_sum: operand bases differ");
  }
  SumNode(const SumNode& o) {
    children_.reserve(o.children_.size());
    for (const auto& c : o.children_) children_.push_back(c->clone());
  }

  std::unique_ptr<OpNode> clone() const override { return std::make_unique<SumNode>(*this); }
  const CompositeBasis& basis() const override { return children_.front()->basis(); }

  void apply_add(complex alpha, std::span<const complex> in, std::span<complex> out) override {
    for (auto& c : children_) c->apply_add(alpha, in, out);
  }
  void apply_slice_add(complex alpha, const complex* in, std::size_t in_stride, complex* out,
                       std::size_t out_stride) override {
    for (auto& c : children_) c->apply_slice_add(alpha, in, in_stride, out, out_stride);
  }
  void set_active_bin(int k) override {
    for (auto& c : children_) c->set_active_bin(k);
  }
  int max_active_bin() const override {
    int m = std::numeric_limits<int>::max();
    for (const auto& c : children_) m = std::min(m, c->max_active_bin());
    return m;
  }
  bool has_kernel() const override {
    for (const auto& c : children_)
      if (c->has_kernel()) return true;
    return false;
  }
  void collect_support(SupportSink& sink) const override {
    for (const auto& c : children_) c->collect_support(sink);
  }
  void collect_factor_rows_cols(std::vector<std::uint32_t>& rows,
                                std::vector<std::uint32_t>& cols) const override {
    for (const auto& c : children_) c->collect_factor_rows_cols(rows, cols);
  }
  void enumerate_entries(std::vector<Triplet>& out) const override {
    for (const auto& c : children_) {
      std::vector<Triplet> part;
      c->enumerate_entries(part);
      out.insert(out.end(), part.begin(), part.end());
    }
    canonicalize(out);
  }
  std::size_t operator_bytes() const override {
    std::size_t s = 0;
    for (const auto& c : children_) s += c->operator_bytes();
    return s;
  }

private:
  std::vector<std::unique_ptr<OpNode>> children_;
};

/// Product applies right-to-left through a pair of preallocated scratch
/// buffers; nothing is allocated at apply time.
class ProductNode final : public OpNode {
public:
  explicit ProductNode(std::vector<std::unique_ptr<OpNode>> children)
      : children_(std::move(children)) {
    if (children_.empty()) throw std::invalid_argument("lazy_product: no operands");
    for (const auto& c : children_)
      if (c->basis() != children_.front()->basis())
        throw std::invalid_argument("lazy_product: operand bases differ");
    scratch_a_.resize(basis().dimension());
    scratch_b_.resize(basis().dimension());
  }
  ProductNode(const ProductNode& o) {
    children_.reserve(o.children_.size());
    for (const auto& c : o.children_) children_.push_back(c->clone());
    scratch_a_.resize(o.scratch_a_.size());
    scratch_b_.resize(o.scratch_b_.size());
  }

  std::unique_ptr<OpNode> clone() const override { return std::make_unique<ProductNode>(*this); }
  const CompositeBasis& basis() const override { return children_.front()->basis(); }

  void apply_add(complex alpha, std::span<const complex> in, std::span<complex> out) override {
    if (children_.size() == 1) {
      children_[0]->apply_add(alpha, in, out);
      return;
    }
    std::fill(scratch_a_.begin(), scratch_a_.end(), complex(0.0, 0.0));
    children_.back()->apply_add(complex(1.0, 0.0), in, scratch_a_);
    std::vector<complex>* cur = &scratch_a_;
    std::vector<complex>* nxt = &scratch_b_;
    for (std::size_t i = children_.size() - 1; i-- > 1;) {
      std::fill(nxt->begin(), nxt->end(), complex(0.0, 0.0));
      children_[i]->apply_add(complex(1.0, 0.0), *cur, *nxt);
      std::swap(cur, nxt);
    }
    children_.front()->apply_add(alpha, *cur, out);
  }
  void apply_slice_add(complex alpha, const complex* in, std::size_t in_stride, complex* out,
                       std::size_t out_stride) override {
    if (children_.size() == 1) {
      children_[0]->apply_slice_add(alpha, in, in_stride, out, out_stride);
      return;
    }
    const std::size_t d = basis().dimension();
    std::fill(scratch_a_.begin(), scratch_a_.begin() + static_cast<std::ptrdiff_t>(d),
              complex(0.0, 0.0));
    children_.back()->apply_slice_add(complex(1.0, 0.0), in, in_stride, scratch_a_.data(), 1);
    std::vector<complex>* cur = &scratch_a_;
    std::vector<complex>* nxt = &scratch_b_;
    for (std::size_t i = children_.size() - 1; i-- > 1;) {
      std::fill(nxt->begin(), nxt->begin() + static_cast<std::ptrdiff_t>(d), complex(0.0, 0.0));
      children_[i]->apply_slice_add(complex(1.0, 0.0), cur->data(), 1, nxt->data(), 1);
      std::swap(cur, nxt);
    }
    children_.front()->apply_slice_add(alpha, cur->data(), 1, out, out_stride);
  }
  void set_active_bin(int k) override {
    for (auto& c : children_) c->set_active_bin(k);
  }
  int max_active_bin() const override {
    int m = std::numeric_limits<int>::max();
    for (const auto& c : children_) m = std::min(m, c->max_active_bin());
    return m;
  }
  bool has_kernel() const override {
    for (const auto& c : children_)
      if (c->has_kernel()) return true;
    return false;
  }
  void collect_support(SupportSink& sink) const override {
    // rows(A...B) lie in rows(A) and cols in cols(B); the child union is a
    // safe over-approximation of both.
    for (const auto& c : children_) c->collect_support(sink);
  }
  void collect_factor_rows_cols(std::vector<std::uint32_t>& rows,
                                std::vector<std::uint32_t>& cols) const override {
    // rows(A...B) lie in rows(A), cols in cols(B)
    std::vector<std::uint32_t> drop;
    children_.front()->collect_factor_rows_cols(rows, drop);
    drop.clear();
    children_.back()->collect_factor_rows_cols(drop, cols);
  }
  void enumerate_entries(std::vector<Triplet>& out) const override {
    std::vector<Triplet> acc;
    children_.back()->enumerate_entries(acc);
    for (std::size_t i = children_.size() - 1; i-- > 0;) {
      std::vector<Triplet> left;
      children_[i]->enumerate_entries(left);
      acc = multiply(left, acc);
    }
    out.insert(out.end(), acc.begin(), acc.end());
    canonicalize(out);
  }
  std::size_t operator_bytes() const override {
    std::size_t s = 0;
    for (const auto& c : children_) s += c->operator_bytes();
    return s;
  }

private:
  static std::vector<Triplet> multiply(const std::vector<Triplet>& a,
                                       const std::vector<Triplet>& b) {
    std::vector<Triplet> out;
    for (const Triplet& x : a)
      for (const Triplet& y : b)
        if (x.col == y.row) out.push_back({x.row, y.col, x.value * y.value});
    canonicalize(out);
    return out;
  }

  std::vector<std::unique_ptr<OpNode>> children_;
  std::vector<complex> scratch_a_;
  std::vector<complex> scratch_b_;
};

/// Tensor product of single-factor operators placed at distinct positions of
/// a composite basis; positions without an operator act as identity. When at
/// most one placed operator contains waveguide kernels, the application is
/// fused: the dense entries of the purely local factors are enumerated and
/// the remaining factor is applied slice-wise, with no intermediate buffer.
class TensorNode final : public OpNode {
public:
  TensorNode(CompositeBasis comp, std::vector<std::pair<std::size_t, std::unique_ptr<OpNode>>> entries)
      : comp_(std::move(comp)), entries_(std::move(entries)) {
    std::vector<bool> used(comp_.n_factors(), false);
    for (auto& [pos, child] : entries_) {
      if (pos >= comp_.n_factors())
        throw std::invalid_argument("lazy_tensor: factor position out of range");
      if (used[pos]) throw std::invalid_argument("lazy_tensor: duplicate factor position");
      used[pos] = true;
      if (child->basis() != CompositeBasis(std::vector<CompositeBasis::Factor>{comp_.factor(pos)}))
        throw std::invalid_argument("lazy_tensor: operand basis does not match factor");
    }
    std::sort(entries_.begin(), entries_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    init_plan();
  }
  TensorNode(const TensorNode& o) : comp_(o.comp_) {
    entries_.reserve(o.entries_.size());
    for (const auto& [pos, child] : o.entries_) entries_.emplace_back(pos, child->clone());
    init_plan();
  }

  std::unique_ptr<OpNode> clone() const override { return std::make_unique<TensorNode>(*this); }
  const CompositeBasis& basis() const override { return comp_; }

  void apply_add(complex alpha, std::span<const complex> in, std::span<complex> out) override {
    if (fused_) {
      apply_fused(alpha, in.data(), out.data());
    } else {
      apply_general(alpha, in, out);
    }
  }
  void apply_slice_add(complex, const complex*, std::size_t, complex*, std::size_t) override {
    throw std::logic_error("TensorNode: tensor nodes act on the full composite space");
  }
  void set_active_bin(int k) override {
    for (auto& [pos, child] : entries_) child->set_active_bin(k);
  }
  int max_active_bin() const override {
    int m = std::numeric_limits<int>::max();
    for (const auto& [pos, child] : entries_) m = std::min(m, child->max_active_bin());
    return m;
  }
  bool has_kernel() const override {
    for (const auto& [pos, child] : entries_)
      if (child->has_kernel()) return true;
    return false;
  }

  void collect_support(SupportSink& sink) const override {
    // The write (read) support is the product of per-factor rows (cols),
    // with the full range at identity positions. The list buffers are
    // reused across calls; bin stepping queries this once per bin.
    std::size_t entry_at = 0;
    for (std::size_t p = 0; p < comp_.n_factors(); ++p) {
      auto& rows = support_rows_[p];
      auto& cols = support_cols_[p];
      if (entry_at < entries_.size() && entries_[entry_at].first == p) {
        rows.clear();
        cols.clear();
        entries_[entry_at].second->collect_factor_rows_cols(rows, cols);
        ++entry_at;
      } else if (rows.size() != comp_.factor_dimension(p)) {
        rows.resize(comp_.factor_dimension(p));
        for (std::uint32_t i = 0; i < rows.size(); ++i) rows[i] = i;
        cols = rows;
      }
    }
    emit_product(sink, support_rows_, 0, 0);
    emit_product(sink, support_cols_, 0, 0);
  }
  void collect_factor_rows_cols(std::vector<std::uint32_t>&,
                                std::vector<std::uint32_t>&) const override {
    throw std::logic_error("TensorNode: not a single-factor operator");
  }

  void enumerate_entries(std::vector<Triplet>& out) const override {
    std::vector<Triplet> acc{{0, 0, complex(1.0, 0.0)}};
    std::size_t entry_at = 0;
    for (std::size_t p = 0; p < comp_.n_factors(); ++p) {
      const std::size_t d = comp_.factor_dimension(p);
      std::vector<Triplet> factor;
      if (entry_at < entries_.size() && entries_[entry_at].first == p) {
        entries_[entry_at].second->enumerate_entries(factor);
        ++entry_at;
      } else {
        factor.reserve(d);
        for (std::uint32_t i = 0; i < d; ++i) factor.push_back({i, i, complex(1.0, 0.0)});
      }
      std::vector<Triplet> next;
      next.reserve(acc.size() * factor.size());
      for (const Triplet& a : acc)
        for (const Triplet& f : factor)
          next.push_back({static_cast<std::uint32_t>(a.row * d + f.row),
                          static_cast<std::uint32_t>(a.col * d + f.col), a.value * f.value});
      acc = std::move(next);
    }
    out.insert(out.end(), acc.begin(), acc.end());
    canonicalize(out);
  }
  std::size_t operator_bytes() const override {
    std::size_t s = sizeof(std::size_t) * entries_.size();
    for (const auto& [pos, child] : entries_) s += child->operator_bytes();
    return s;
  }

private:
  void init_plan() {
    support_rows_.assign(comp_.n_factors(), {});
    support_cols_.assign(comp_.n_factors(), {});
    fused_ = true;
    std::size_t n_kernel = 0;
    for (const auto& [pos, child] : entries_)
      if (child->has_kernel()) ++n_kernel;
    if (n_kernel > 1) fused_ = false;
    if (fused_) init_fused_plan();
    if (!fused_) {
      scratch_a_.resize(comp_.dimension());
      scratch_b_.resize(comp_.dimension());
    }
  }

  void init_fused_plan() {
    // Dense entries of the purely local placed operators; the (at most one)
    // kernel-bearing child is applied slice-wise at runtime.
    big_pos_ = comp_.n_factors();
    local_entries_.clear();
    local_positions_.clear();
    id_positions_.clear();
    std::size_t entry_at = 0;
    for (std::size_t p = 0; p < comp_.n_factors(); ++p) {
      if (entry_at < entries_.size() && entries_[entry_at].first == p) {
        OpNode* child = entries_[entry_at].second.get();
        ++entry_at;
        if (child->has_kernel()) {
          big_pos_ = p;
          big_ = child;
        } else {
          std::vector<Triplet> t;
          child->enumerate_entries(t);
          local_entries_.push_back(std::move(t));
          local_positions_.push_back(p);
        }
      } else {
        id_positions_.push_back(p);
      }
    }
    combo_.reserve(local_entries_.size());
  }

  void apply_fused(complex alpha, const complex* in, complex* out) {
    for (const auto& le : local_entries_)
      if (le.empty()) return;  // a structurally zero local factor nulls the term
    combo_.assign(local_entries_.size(), 0);
    const bool has_big = big_pos_ != comp_.n_factors();
    while (true) {
      complex v = alpha;
      std::size_t row_base = 0;
      std::size_t col_base = 0;
      for (std::size_t i = 0; i < local_entries_.size(); ++i) {
        const Triplet& t = local_entries_[i][combo_[i]];
        v *= t.value;
        row_base += t.row * comp_.stride(local_positions_[i]);
        col_base += t.col * comp_.stride(local_positions_[i]);
      }
      apply_identity_block(v, row_base, col_base, 0, in, out, has_big);
      // next combination of local entries
      std::size_t i = 0;
      for (; i < combo_.size(); ++i) {
        if (++combo_[i] < local_entries_[i].size()) break;
        combo_[i] = 0;
      }
      if (i == combo_.size()) break;
      if (combo_.empty()) break;
    }
  }

  void apply_identity_block(complex v, std::size_t row_base, std::size_t col_base,
                            std::size_t id_at, const complex* in, complex* out, bool has_big) {
    if (id_at == id_positions_.size()) {
      if (has_big) {
        const std::size_t s = comp_.stride(big_pos_);
        big_->apply_slice_add(v, in + col_base, s, out + row_base, s);
      } else {
        out[row_base] += v * in[col_base];
      }
      return;
    }
    const std::size_t p = id_positions_[id_at];
    const std::size_t d = comp_.factor_dimension(p);
    const std::size_t s = comp_.stride(p);
    for (std::size_t i = 0; i < d; ++i)
      apply_identity_block(v, row_base + i * s, col_base + i * s, id_at + 1, in, out, has_big);
  }

  void apply_general(complex alpha, std::span<const complex> in, std::span<complex> out) {
    // Sequential subspace application: A (x) B = (A (x) I) (I (x) B).
    std::span<const complex> cur = in;
    std::vector<complex>* buf = &scratch_a_;
    std::vector<complex>* other = &scratch_b_;
    for (std::size_t e = 0; e < entries_.size(); ++e) {
      const bool last = e + 1 == entries_.size();
      const std::size_t p = entries_[e].first;
      OpNode* child = entries_[e].second.get();
      const std::size_t d = comp_.factor_dimension(p);
      const std::size_t s = comp_.stride(p);
      const std::size_t outer = comp_.dimension() / (d * s);
      complex a = last ? alpha : complex(1.0, 0.0);
      std::span<complex> dst = last ? out : std::span<complex>(*buf);
      if (!last) std::fill(buf->begin(), buf->end(), complex(0.0, 0.0));
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t inner = 0; inner < s; ++inner) {
          const std::size_t off = o * d * s + inner;
          child->apply_slice_add(a, cur.data() + off, s, dst.data() + off, s);
        }
      if (!last) {
        cur = std::span<const complex>(*buf);
        std::swap(buf, other);
      }
    }
    if (entries_.empty()) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += alpha * in[i];
    }
  }

  void emit_product(SupportSink& sink, const std::vector<std::vector<std::uint32_t>>& lists,
                    std::size_t p, std::size_t base) const {
    if (p == lists.size()) {
      sink.add(base);
      return;
    }
    const std::size_t s = comp_.stride(p);
    for (std::uint32_t i : lists[p]) emit_product(sink, lists, p + 1, base + i * s);
  }

  CompositeBasis comp_;
  std::vector<std::pair<std::size_t, std::unique_ptr<OpNode>>> entries_;
  bool fused_ = true;
  std::size_t big_pos_ = 0;
  OpNode* big_ = nullptr;
  std::vector<std::vector<Triplet>> local_entries_;
  std::vector<std::size_t> local_positions_;
  std::vector<std::size_t> id_positions_;
  std::vector<std::size_t> combo_;
  mutable std::vector<std::vector<std::uint32_t>> support_rows_;
  mutable std::vector<std::vector<std::uint32_t>> support_cols_;
  std::vector<complex> scratch_a_;
  std::vector<complex> scratch_b_;
};

}  // namespace detail

/// Lazily composed operator: a tree of sums, products, tensor placements and
/// scalar scalings over matrix-free kernels and dense local operators,
/// evaluated only when applied to a state. Trees own their nodes; copying a
/// LazyOp deep-copies the tree, so moving the active bin of one tree never
/// affects another.
class LazyOp {
public:
  explicit LazyOp(std::unique_ptr<detail::OpNode> node) : node_(std::move(node)) {}
  LazyOp(const LazyOp& o) : node_(o.node_->clone()) {}
  LazyOp& operator=(const LazyOp& o) {
    if (this != &o) node_ = o.node_->clone();
    return *this;
  }
  LazyOp(LazyOp&&) = default;
  LazyOp& operator=(LazyOp&&) = default;

  const CompositeBasis& basis() const { return node_->basis(); }
  std::size_t dimension() const { return node_->basis().dimension(); }

  /// Points every waveguide kernel in the tree at time-bin k. Local
  /// operators are untouched. Rejects k when any delayed kernel would
  /// address a bin beyond the grid.
  void set_active_bin(int k) {
    if (k < 1 || k > node_->max_active_bin())
      throw std::out_of_range("set_active_bin: bin outside the admissible range");
    node_->set_active_bin(k);
  }
  int max_active_bin() const { return node_->max_active_bin(); }
  bool has_kernel() const { return node_->has_kernel(); }

  std::size_t operator_bytes() const { return node_->operator_bytes(); }

  std::vector<Triplet> entries() const {
    std::vector<Triplet> t;
    node_->enumerate_entries(t);
    return t;
  }

  detail::OpNode& node() { return *node_; }
  const detail::OpNode& node() const { return *node_; }

private:
  std::unique_ptr<detail::OpNode> node_;
};

inline LazyOp waveguide_destroy(const WaveguideBasis& basis, int guide = 1, int delay_bins = 0) {
  return LazyOp(std::make_unique<detail::KernelLeaf>(
      WaveguideKernelOp(basis, guide, KernelKind::annihilate, delay_bins)));
}
inline LazyOp waveguide_create(const WaveguideBasis& basis, int guide = 1, int delay_bins = 0) {
  return LazyOp(std::make_unique<detail::KernelLeaf>(
      WaveguideKernelOp(basis, guide, KernelKind::create, delay_bins)));
}
inline LazyOp local_operator(LocalOp op) {
  return LazyOp(std::make_unique<detail::LocalLeaf>(std::move(op)));
}
inline LazyOp fock_destroy(const FockBasis& b) { return local_operator(LocalOp::destroy(b)); }
inline LazyOp fock_create(const FockBasis& b) { return local_operator(LocalOp::create(b)); }
inline LazyOp fock_number(const FockBasis& b) { return local_operator(LocalOp::number(b)); }
inline LazyOp fock_identity(const FockBasis& b) { return local_operator(LocalOp::identity(b)); }

inline LazyOp scale(complex factor, const LazyOp& op) {
  return LazyOp(std::make_unique<detail::ScaledNode>(factor, op.node().clone()));
}

inline LazyOp lazy_sum(const std::vector<LazyOp>& ops) {
  std::vector<std::unique_ptr<detail::OpNode>> children;
  children.reserve(ops.size());
  for (const LazyOp& o : ops) children.push_back(o.node().clone());
  return LazyOp(std::make_unique<detail::SumNode>(std::move(children)));
}

inline LazyOp lazy_product(const std::vector<LazyOp>& ops) {
  std::vector<std::unique_ptr<detail::OpNode>> children;
  children.reserve(ops.size());
  for (const LazyOp& o : ops) children.push_back(o.node().clone());
  return LazyOp(std::make_unique<detail::ProductNode>(std::move(children)));
}

inline LazyOp lazy_tensor(const CompositeBasis& comp,
                          std::vector<std::pair<std::size_t, LazyOp>> placed) {
  std::vector<std::pair<std::size_t, std::unique_ptr<detail::OpNode>>> entries;
  entries.reserve(placed.size());
  for (auto& [pos, op] : placed) entries.emplace_back(pos, op.node().clone());
  return LazyOp(std::make_unique<detail::TensorNode>(comp, std::move(entries)));
}

/// Positional convenience: one operator per factor, in order.
inline LazyOp lazy_tensor(const CompositeBasis& comp, const LazyOp& a, const LazyOp& b) {
  if (comp.n_factors() != 2)
    throw std::invalid_argument("lazy_tensor: positional form needs a two-factor basis");
  std::vector<std::pair<std::size_t, LazyOp>> placed;
  placed.emplace_back(0, a);
  placed.emplace_back(1, b);
  return lazy_tensor(comp, std::move(placed));
}

inline LazyOp lazy_identity(const CompositeBasis& comp) {
  return LazyOp(std::make_unique<detail::TensorNode>(
      comp, std::vector<std::pair<std::size_t, std::unique_ptr<detail::OpNode>>>{}));
}

inline LazyOp operator*(complex factor, const LazyOp& op) { return scale(factor, op); }
inline LazyOp operator*(double factor, const LazyOp& op) {
  return scale(complex(factor, 0.0), op);
}
inline LazyOp operator+(const LazyOp& a, const LazyOp& b) { return lazy_sum({a, b}); }
inline LazyOp operator-(const LazyOp& a, const LazyOp& b) {
  return lazy_sum({a, scale(complex(-1.0, 0.0), b)});
}

/// out <- alpha * (Op * in) + beta * out. No heap allocation happens inside
/// the call; any scratch was preallocated when the tree was built.
inline void apply_accumulate(StateVector& out, LazyOp& op, const StateVector& in, complex alpha,
                             complex beta) {
  if (out.basis() != in.basis() || op.basis() != in.basis())
    throw std::invalid_argument("apply_accumulate: dimension/basis mismatch");
  if (out.amplitudes().data() == in.amplitudes().data())
    throw std::invalid_argument("apply_accumulate: out must not alias in");
  auto o = out.amplitudes();
  if (beta == complex(0.0, 0.0)) {
    std::fill(o.begin(), o.end(), complex(0.0, 0.0));
  } else if (beta != complex(1.0, 0.0)) {
    for (complex& x : o) x *= beta;
  }
  op.node().apply_add(alpha, in.amplitudes(), o);
}

/// <psi | Op psi>. Allocates one scratch vector; use apply_accumulate with a
/// caller-owned buffer in hot loops.
inline complex expect(LazyOp& op, const StateVector& psi) {
  StateVector scratch(psi.basis());
  apply_accumulate(scratch, op, psi, complex(1.0, 0.0), complex(0.0, 0.0));
  return inner(psi, scratch);
}

}  // namespace wqed
