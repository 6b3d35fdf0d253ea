#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

#include <json.hpp>

#include "synthref/backend.hpp"

namespace synthref {

enum class CacheNamespace { reference_set, continuation_scores, generation };

std::string_view to_string(CacheNamespace ns);

struct CacheKey {
  CacheNamespace ns = CacheNamespace::generation;
  std::string digest;

  /// Digest of the canonical (sorted-key) JSON dump of `fields`. Stable across
  /// processes and platforms for identical inputs.
  static CacheKey make(CacheNamespace ns, const nlohmann::json& fields);
};

/// Append-only store. Layout under the root:
///
///   <namespace>/segment-00000.jsonl   payload bytes, concatenated
///   <namespace>/segment-00000.idx     one JSON line per entry:
///                                     {"key","offset","length","sha256"}
///   <namespace>/.lock                 advisory write lock
///
/// reference_set payloads are release-format JSONL, so a reference segment is
/// itself a valid release file. The index is rebuilt from the sidecars at open
/// and refreshed under the lock before every write, so several processes may
/// share a directory.
class Cache {
 public:
  explicit Cache(std::filesystem::path root,
                 std::uint64_t segment_limit_bytes = std::uint64_t{64} << 20);

  /// Stored bytes, or nullopt. Throws IntegrityError naming the key when the
  /// stored bytes no longer match their checksum.
  std::optional<std::string> get(const CacheKey& key) const;

  /// Stores the payload. Re-putting identical bytes is a no-op; different
  /// bytes under an existing key throw IntegrityError.
  void put(const CacheKey& key, std::string_view payload);

  std::size_t size(CacheNamespace ns) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  struct Entry {
    std::string segment;  // file stem, e.g. "segment-00000"
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
    std::string sha256;
  };
  using Index = std::map<std::string, Entry>;

  std::filesystem::path dir(CacheNamespace ns) const;
  void load(CacheNamespace ns, Index& index) const;
  std::string read_entry(CacheNamespace ns, const Entry& entry) const;

  std::filesystem::path root_;
  std::uint64_t segment_limit_;
  mutable std::shared_mutex mutex_;
  std::map<CacheNamespace, Index> index_;
};

/// Backend decorator answering repeated requests from the cache. Requests
/// are keyed by model, prompt digest, candidates or choices, and sampling
/// parameters including the seed.
class CachingBackend : public Backend {
 public:
  CachingBackend(Backend& inner, Cache& cache);

  const BackendDescriptor& descriptor() const override { return inner_.descriptor(); }
  bool supports_continuation_scoring() const override {
    return inner_.supports_continuation_scoring();
  }

  /// Requests forwarded to the wrapped backend.
  std::size_t forwarded() const { return forwarded_; }

 protected:
  std::string do_generate(const GenerationRequest& req) override;
  std::vector<double> do_score_continuations(const ContinuationScoreRequest& req) override;
  ChoiceHistogram do_sample_choice(const ChoiceSampleRequest& req) override;

 private:
  Backend& inner_;
  Cache& cache_;
  std::atomic<std::size_t> forwarded_{0};
};

}  // namespace synthref
