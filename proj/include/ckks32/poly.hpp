#pragma once

// Polynomial storage (rows x N residue matrix), buffer pooling, and fusable
// element-wise pipelines. Evaluation-domain columns are stored bit-reversed.

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include "ckks32/rns.hpp"

namespace ckks32 {

enum class Domain : uint8_t { Coefficient = 0, Evaluation = 1 };

class BufferPool;

// RAII handle for a pooled int32 buffer.
class PoolBuffer {
 public:
  PoolBuffer() = default;
  PoolBuffer(int32_t* data, size_t cls, BufferPool* pool)
      : data_(data), class_(cls), pool_(pool) {}
  PoolBuffer(PoolBuffer&& o) noexcept { *this = std::move(o); }
  PoolBuffer& operator=(PoolBuffer&& o) noexcept;
  PoolBuffer(const PoolBuffer&) = delete;
  PoolBuffer& operator=(const PoolBuffer&) = delete;
  ~PoolBuffer() { reset(); }

  int32_t* data() const { return data_; }
  explicit operator bool() const { return data_ != nullptr; }
  void reset();

 private:
  int32_t* data_ = nullptr;
  size_t class_ = 0;  // element count of the class; 0 = direct allocation
  BufferPool* pool_ = nullptr;
};

// Free lists keyed by element-count class. Requests above the largest class
// fall back to direct allocation (recorded in the statistics).
class BufferPool {
 public:
  struct Stats {
    uint64_t acquires = 0;
    uint64_t reuses = 0;
    uint64_t allocations = 0;
    uint64_t fallbacks = 0;
    uint64_t live = 0;   // buffers currently handed out
    uint64_t held = 0;   // buffers parked in free lists
  };

  explicit BufferPool(std::vector<size_t> classes = {});

  PoolBuffer acquire(size_t elems);
  Stats stats() const;

 private:
  friend class PoolBuffer;
  void release(int32_t* data, size_t cls);

  struct ClassList {
    size_t size;
    std::vector<int32_t*> free;
  };
  mutable std::mutex mu_;
  std::vector<ClassList> classes_;  // ascending by size
  Stats stats_;
};

class Polynomial {
 public:
  Polynomial() = default;
  // Zero-initialized polynomial over the basis prefix [0, q_count) of Q plus
  // the first p_count P primes.
  Polynomial(std::shared_ptr<const RnsBasis> basis, uint32_t q_count,
             uint32_t p_count, Domain domain, bool mont, BufferPool* pool);

  Polynomial clone(BufferPool* pool) const;

  const std::shared_ptr<const RnsBasis>& basis() const { return basis_; }
  uint32_t n() const { return basis_ ? basis_->n : 0; }
  uint32_t q_count() const { return q_count_; }
  uint32_t p_count() const { return p_count_; }
  uint32_t rows() const { return q_count_ + p_count_; }
  Domain domain() const { return domain_; }
  bool mont() const { return mont_; }
  void set_domain(Domain d) { domain_ = d; }
  void set_mont(bool m) { mont_ = m; }

  int32_t* row(uint32_t i) { return buf_.data() + static_cast<size_t>(i) * n(); }
  const int32_t* row(uint32_t i) const {
    return buf_.data() + static_cast<size_t>(i) * n();
  }
  // PrimeContext for row i (Q prefix first, then P primes).
  const PrimeContext& prime_at(uint32_t i) const {
    return i < q_count_ ? basis_->q_primes[i] : basis_->p_primes[i - q_count_];
  }
  // Index of row i's prime in the full basis ordering (Q then P).
  uint32_t global_prime_index(uint32_t i) const {
    return i < q_count_ ? i
                        : static_cast<uint32_t>(basis_->l()) + (i - q_count_);
  }

  bool shape_matches(const Polynomial& o) const {
    return basis_ == o.basis_ && q_count_ == o.q_count_ && p_count_ == o.p_count_;
  }

 private:
  std::shared_ptr<const RnsBasis> basis_;
  uint32_t q_count_ = 0;
  uint32_t p_count_ = 0;
  Domain domain_ = Domain::Coefficient;
  bool mont_ = false;
  PoolBuffer buf_;
};

// Element-wise operations. Operands must share basis prefix, domain and
// Montgomery flag (ew_mul: Montgomery-form operands produce Montgomery form).
Polynomial ew_add(const Polynomial& a, const Polynomial& b, BufferPool* pool);
Polynomial ew_sub(const Polynomial& a, const Polynomial& b, BufferPool* pool);
Polynomial ew_mul(const Polynomial& a, const Polynomial& b, BufferPool* pool);
// consts_mont: one canonical Montgomery-form constant per row.
Polynomial ew_mul_const(const Polynomial& a, std::span<const uint32_t> consts_mont,
                        BufferPool* pool);
void ew_add_inplace(Polynomial& a, const Polynomial& b);
void ew_sub_inplace(Polynomial& a, const Polynomial& b);

// Fused element-wise pipelines: one read of the input and each operand, one
// write of the output per element, with the reduction schedule of the
// sequential ops (add/sub correct to (-q, q); add_lazy accumulates; correct
// canonicalizes to [0, q)).
struct PipelineStage {
  enum class Kind { MulConst, Add, Sub, Mul, AddLazy, Correct, Permute } kind;
  const Polynomial* operand = nullptr;
  std::span<const uint32_t> consts;
  std::span<const uint32_t> permutation;
};

class Pipeline;

class PipelineBuilder {
 public:
  PipelineBuilder& mul_const(std::span<const uint32_t> consts_mont);
  PipelineBuilder& add(const Polynomial& p);
  PipelineBuilder& sub(const Polynomial& p);
  PipelineBuilder& mul(const Polynomial& p);
  PipelineBuilder& add_lazy(const Polynomial& p);
  PipelineBuilder& correct();
  // Index permutations are not element-aligned; build() rejects them.
  PipelineBuilder& permute(std::span<const uint32_t> map);
  Pipeline build() const;

 private:
  std::vector<PipelineStage> stages_;
};

class Pipeline {
 public:
  // Single-pass execution over `input`; empty pipeline copies the input.
  Polynomial run(const Polynomial& input, BufferPool* pool) const;

 private:
  friend class PipelineBuilder;
  explicit Pipeline(std::vector<PipelineStage> stages) : stages_(std::move(stages)) {}
  std::vector<PipelineStage> stages_;
};

// Polynomial serialization: header (N, rows split, domain, mont, basis hash)
// + rows as little-endian canonical u32 residues.
std::vector<uint8_t> serialize_poly(const Polynomial& p);
Polynomial deserialize_poly(std::span<const uint8_t> bytes,
                            std::shared_ptr<const RnsBasis> basis,
                            BufferPool* pool);

}  // namespace ckks32
