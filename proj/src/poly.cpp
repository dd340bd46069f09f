#include "ckks32/poly.hpp"

#include <algorithm>
#include <cstring>

namespace ckks32 {

PoolBuffer& PoolBuffer::operator=(PoolBuffer&& o) noexcept {
  if (this != &o) {
    reset();
    data_ = o.data_;
    class_ = o.class_;
    pool_ = o.pool_;
    o.data_ = nullptr;
    o.pool_ = nullptr;
  }
  return *this;
}

void PoolBuffer::reset() {
  if (!data_) return;
  if (pool_) {
    pool_->release(data_, class_);
  } else {
    delete[] data_;
  }
  data_ = nullptr;
  pool_ = nullptr;
}

BufferPool::BufferPool(std::vector<size_t> classes) {
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  for (size_t s : classes) classes_.push_back({s, {}});
}

PoolBuffer BufferPool::acquire(size_t elems) {
  std::lock_guard lock(mu_);
  ++stats_.acquires;
  for (auto& cls : classes_) {
    if (cls.size < elems) continue;
    int32_t* buf;
    if (!cls.free.empty()) {
      buf = cls.free.back();
      cls.free.pop_back();
      --stats_.held;
      ++stats_.reuses;
    } else {
      buf = new int32_t[cls.size];
      ++stats_.allocations;
    }
    ++stats_.live;
    return PoolBuffer(buf, cls.size, this);
  }
  // no class fits: direct allocation, freed on release
  ++stats_.fallbacks;
  ++stats_.allocations;
  ++stats_.live;
  return PoolBuffer(new int32_t[std::max<size_t>(elems, 1)], 0, this);
}

void BufferPool::release(int32_t* data, size_t cls) {
  std::lock_guard lock(mu_);
  --stats_.live;
  if (cls == 0) {
    delete[] data;
    return;
  }
  for (auto& c : classes_) {
    if (c.size == cls) {
      c.free.push_back(data);
      ++stats_.held;
      return;
    }
  }
  delete[] data;
}

BufferPool::Stats BufferPool::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

namespace {
PoolBuffer alloc(BufferPool* pool, size_t elems) {
  if (pool) return pool->acquire(elems);
  return PoolBuffer(new int32_t[std::max<size_t>(elems, 1)], 0, nullptr);
}
}  // namespace

Polynomial::Polynomial(std::shared_ptr<const RnsBasis> basis, uint32_t q_count,
                       uint32_t p_count, Domain domain, bool mont,
                       BufferPool* pool)
    : basis_(std::move(basis)),
      q_count_(q_count),
      p_count_(p_count),
      domain_(domain),
      mont_(mont) {
  if (q_count_ > basis_->l() || p_count_ > basis_->alpha())
    throw std::invalid_argument("prefix exceeds basis");
  size_t elems = static_cast<size_t>(rows()) * basis_->n;
  buf_ = alloc(pool, elems);
  std::memset(buf_.data(), 0, elems * sizeof(int32_t));
}

Polynomial Polynomial::clone(BufferPool* pool) const {
  Polynomial out(basis_, q_count_, p_count_, domain_, mont_, pool);
  std::memcpy(out.buf_.data(), buf_.data(),
              static_cast<size_t>(rows()) * n() * sizeof(int32_t));
  return out;
}

namespace {

void check_binary(const Polynomial& a, const Polynomial& b) {
  if (!a.shape_matches(b)) throw std::invalid_argument("basis prefix mismatch");
  if (a.domain() != b.domain()) throw std::invalid_argument("domain mismatch");
  if (a.mont() != b.mont()) throw std::invalid_argument("Montgomery flag mismatch");
}

inline int32_t narrow(int64_t v, int32_t q) {
  if (v >= q) v -= q;
  else if (v <= -q) v += q;
  return static_cast<int32_t>(v);
}

template <typename F>
Polynomial binary_op(const Polynomial& a, const Polynomial& b, BufferPool* pool,
                     bool mont_out, F&& f) {
  check_binary(a, b);
  Polynomial out(a.basis(), a.q_count(), a.p_count(), a.domain(), mont_out, pool);
  const size_t n = a.n();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < a.rows(); ++i) {
    const PrimeContext& c = a.prime_at(static_cast<uint32_t>(i));
    const int32_t* pa = a.row(static_cast<uint32_t>(i));
    const int32_t* pb = b.row(static_cast<uint32_t>(i));
    int32_t* po = out.row(static_cast<uint32_t>(i));
    for (size_t j = 0; j < n; ++j) po[j] = f(pa[j], pb[j], c);
  }
  return out;
}

}  // namespace

Polynomial ew_add(const Polynomial& a, const Polynomial& b, BufferPool* pool) {
  return binary_op(a, b, pool, a.mont(), [](int32_t x, int32_t y, const PrimeContext& c) {
    return narrow(static_cast<int64_t>(x) + y, static_cast<int32_t>(c.q));
  });
}

Polynomial ew_sub(const Polynomial& a, const Polynomial& b, BufferPool* pool) {
  return binary_op(a, b, pool, a.mont(), [](int32_t x, int32_t y, const PrimeContext& c) {
    return narrow(static_cast<int64_t>(x) - y, static_cast<int32_t>(c.q));
  });
}

Polynomial ew_mul(const Polynomial& a, const Polynomial& b, BufferPool* pool) {
  if (!a.mont() || !b.mont())
    throw std::invalid_argument("ew_mul expects Montgomery-form operands");
  return binary_op(a, b, pool, true, [](int32_t x, int32_t y, const PrimeContext& c) {
    return mont_mul(x, y, c);
  });
}

Polynomial ew_mul_const(const Polynomial& a, std::span<const uint32_t> consts_mont,
                        BufferPool* pool) {
  if (consts_mont.size() != a.rows())
    throw std::invalid_argument("constant count mismatch");
  Polynomial out(a.basis(), a.q_count(), a.p_count(), a.domain(), a.mont(), pool);
  const size_t n = a.n();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < a.rows(); ++i) {
    const PrimeContext& c = a.prime_at(static_cast<uint32_t>(i));
    const int32_t k = static_cast<int32_t>(consts_mont[i]);
    const int32_t* pa = a.row(static_cast<uint32_t>(i));
    int32_t* po = out.row(static_cast<uint32_t>(i));
    for (size_t j = 0; j < n; ++j) po[j] = mont_mul(pa[j], k, c);
  }
  return out;
}

void ew_add_inplace(Polynomial& a, const Polynomial& b) {
  check_binary(a, b);
  const size_t n = a.n();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < a.rows(); ++i) {
    const int32_t q = static_cast<int32_t>(a.prime_at(static_cast<uint32_t>(i)).q);
    int32_t* pa = a.row(static_cast<uint32_t>(i));
    const int32_t* pb = b.row(static_cast<uint32_t>(i));
    for (size_t j = 0; j < n; ++j) pa[j] = narrow(static_cast<int64_t>(pa[j]) + pb[j], q);
  }
}

void ew_sub_inplace(Polynomial& a, const Polynomial& b) {
  check_binary(a, b);
  const size_t n = a.n();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < a.rows(); ++i) {
    const int32_t q = static_cast<int32_t>(a.prime_at(static_cast<uint32_t>(i)).q);
    int32_t* pa = a.row(static_cast<uint32_t>(i));
    const int32_t* pb = b.row(static_cast<uint32_t>(i));
    for (size_t j = 0; j < n; ++j) pa[j] = narrow(static_cast<int64_t>(pa[j]) - pb[j], q);
  }
}

PipelineBuilder& PipelineBuilder::mul_const(std::span<const uint32_t> consts_mont) {
  stages_.push_back({PipelineStage::Kind::MulConst, nullptr, consts_mont, {}});
  return *this;
}
PipelineBuilder& PipelineBuilder::add(const Polynomial& p) {
  stages_.push_back({PipelineStage::Kind::Add, &p, {}, {}});
  return *this;
}
PipelineBuilder& PipelineBuilder::sub(const Polynomial& p) {
  stages_.push_back({PipelineStage::Kind::Sub, &p, {}, {}});
  return *this;
}
PipelineBuilder& PipelineBuilder::mul(const Polynomial& p) {
  stages_.push_back({PipelineStage::Kind::Mul, &p, {}, {}});
  return *this;
}
PipelineBuilder& PipelineBuilder::add_lazy(const Polynomial& p) {
  stages_.push_back({PipelineStage::Kind::AddLazy, &p, {}, {}});
  return *this;
}
PipelineBuilder& PipelineBuilder::correct() {
  stages_.push_back({PipelineStage::Kind::Correct, nullptr, {}, {}});
  return *this;
}
PipelineBuilder& PipelineBuilder::permute(std::span<const uint32_t> map) {
  stages_.push_back({PipelineStage::Kind::Permute, nullptr, {}, map});
  return *this;
}

Pipeline PipelineBuilder::build() const {
  for (const auto& s : stages_) {
    if (s.kind == PipelineStage::Kind::Permute)
      throw std::invalid_argument("permutation stages are not element-aligned");
  }
  return Pipeline(stages_);
}

Polynomial Pipeline::run(const Polynomial& input, BufferPool* pool) const {
  for (const auto& s : stages_) {
    if (s.operand && !s.operand->shape_matches(input))
      throw std::invalid_argument("pipeline operand shape mismatch");
    if (!s.consts.empty() && s.consts.size() != input.rows())
      throw std::invalid_argument("pipeline constant count mismatch");
  }
  Polynomial out(input.basis(), input.q_count(), input.p_count(), input.domain(),
                 input.mont(), pool);
  const size_t n = input.n();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < input.rows(); ++i) {
    const uint32_t row = static_cast<uint32_t>(i);
    const PrimeContext& c = input.prime_at(row);
    const int32_t q = static_cast<int32_t>(c.q);
    const int32_t* pin = input.row(row);
    int32_t* pout = out.row(row);
    for (size_t j = 0; j < n; ++j) {
      int64_t v = pin[j];
      for (const auto& s : stages_) {
        switch (s.kind) {
          case PipelineStage::Kind::MulConst:
            v = mont_mul(static_cast<int32_t>(v),
                         static_cast<int32_t>(s.consts[row]), c);
            break;
          case PipelineStage::Kind::Add:
            v = narrow(v + s.operand->row(row)[j], q);
            break;
          case PipelineStage::Kind::Sub:
            v = narrow(v - s.operand->row(row)[j], q);
            break;
          case PipelineStage::Kind::Mul:
            v = mont_mul(static_cast<int32_t>(v), s.operand->row(row)[j], c);
            break;
          case PipelineStage::Kind::AddLazy:
            v = lazy_add(v, s.operand->row(row)[j]);
            break;
          case PipelineStage::Kind::Correct:
            v = static_cast<int64_t>(correct(v, c.q));
            break;
          case PipelineStage::Kind::Permute:
            break;  // unreachable: rejected at build
        }
      }
      pout[j] = static_cast<int32_t>(v);
    }
  }
  return out;
}

namespace {
constexpr uint32_t kPolyMagic = 0x31534c50u;  // "PLS1"
}

std::vector<uint8_t> serialize_poly(const Polynomial& p) {
  std::vector<uint8_t> out;
  auto put_u32 = [&out](uint32_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 24));
  };
  put_u32(kPolyMagic);
  put_u32(p.n());
  put_u32(p.q_count());
  put_u32(p.p_count());
  put_u32(static_cast<uint32_t>(p.domain()));
  put_u32(p.mont() ? 1 : 0);
  uint64_t h = p.basis()->hash();
  put_u32(static_cast<uint32_t>(h));
  put_u32(static_cast<uint32_t>(h >> 32));
  for (uint32_t i = 0; i < p.rows(); ++i) {
    const uint32_t q = p.prime_at(i).q;
    const int32_t* row = p.row(i);
    for (uint32_t j = 0; j < p.n(); ++j) put_u32(correct(row[j], q));
  }
  return out;
}

Polynomial deserialize_poly(std::span<const uint8_t> bytes,
                            std::shared_ptr<const RnsBasis> basis,
                            BufferPool* pool) {
  size_t pos = 0;
  auto get_u32 = [&bytes, &pos]() {
    if (pos + 4 > bytes.size()) throw std::runtime_error("truncated polynomial blob");
    uint32_t v = static_cast<uint32_t>(bytes[pos]) |
                 static_cast<uint32_t>(bytes[pos + 1]) << 8 |
                 static_cast<uint32_t>(bytes[pos + 2]) << 16 |
                 static_cast<uint32_t>(bytes[pos + 3]) << 24;
    pos += 4;
    return v;
  };
  if (get_u32() != kPolyMagic) throw std::runtime_error("bad polynomial magic");
  uint32_t n = get_u32();
  if (n != basis->n) throw std::runtime_error("ring degree mismatch");
  uint32_t q_count = get_u32();
  uint32_t p_count = get_u32();
  Domain domain = static_cast<Domain>(get_u32());
  bool mont = get_u32() != 0;
  uint64_t h = get_u32();
  h |= static_cast<uint64_t>(get_u32()) << 32;
  if (h != basis->hash()) throw std::runtime_error("basis hash mismatch");
  Polynomial p(basis, q_count, p_count, domain, mont, pool);
  for (uint32_t i = 0; i < p.rows(); ++i) {
    int32_t* row = p.row(i);
    for (uint32_t j = 0; j < n; ++j) row[j] = static_cast<int32_t>(get_u32());
  }
  return p;
}

}  // namespace ckks32
