#include "synthref/cache.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "synthref/errors.hpp"
#include "synthref/hashing.hpp"

namespace synthref {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(CacheNamespace ns) {
  switch (ns) {
    case CacheNamespace::reference_set:
      return "reference_set";
    case CacheNamespace::continuation_scores:
      return "continuation_scores";
    case CacheNamespace::generation:
      return "generation";
  }
  return "unknown";
}

CacheKey CacheKey::make(CacheNamespace ns, const json& fields) {
  // nlohmann::json objects are std::map backed, so dump() is key-sorted.
  return {ns, sha256_hex(std::string(to_string(ns)) + "\n" + fields.dump())};
}

namespace {

constexpr CacheNamespace kAll[] = {CacheNamespace::reference_set,
                                   CacheNamespace::continuation_scores,
                                   CacheNamespace::generation};

// RAII flock on <dir>/.lock.
class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw Error("cannot lock " + path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

std::string segment_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "segment-%05d", i);
  return buf;
}

}  // namespace

Cache::Cache(fs::path root, std::uint64_t segment_limit_bytes)
    : root_(std::move(root)), segment_limit_(segment_limit_bytes) {
  for (auto ns : kAll) {
    fs::create_directories(dir(ns));
    load(ns, index_[ns]);
  }
}

fs::path Cache::dir(CacheNamespace ns) const { return root_ / std::string(to_string(ns)); }

void Cache::load(CacheNamespace ns, Index& index) const {
  index.clear();
  for (int i = 0;; ++i) {
    const fs::path idx = dir(ns) / (segment_name(i) + ".idx");
    if (!fs::exists(idx)) break;
    std::ifstream in(idx);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        const json j = json::parse(line);
        index[j.at("key").get<std::string>()] = {segment_name(i),
                                                 j.at("offset").get<std::uint64_t>(),
                                                 j.at("length").get<std::uint64_t>(),
                                                 j.at("sha256").get<std::string>()};
      } catch (const json::exception&) {
        // A torn trailing line from a crashed writer; its payload is simply
        // unindexed. Anything earlier is real damage.
        if (in.peek() != std::char_traits<char>::eof()) {
          throw IntegrityError("corrupt cache index " + idx.string() + " line " +
                               std::to_string(n));
        }
      }
    }
  }
}

std::string Cache::read_entry(CacheNamespace ns, const Entry& entry) const {
  std::ifstream in(dir(ns) / (entry.segment + ".jsonl"), std::ios::binary);
  std::string bytes(entry.length, '\0');
  if (in) {
    in.seekg(static_cast<std::streamoff>(entry.offset));
    in.read(bytes.data(), static_cast<std::streamsize>(entry.length));
  }
  if (!in || static_cast<std::uint64_t>(in.gcount()) != entry.length) bytes.clear();
  return bytes;
}

std::optional<std::string> Cache::get(const CacheKey& key) const {
  std::shared_lock lock(mutex_);
  const auto& index = index_.at(key.ns);
  auto it = index.find(key.digest);
  if (it == index.end()) return std::nullopt;
  std::string bytes = read_entry(key.ns, it->second);
  if (bytes.size() != it->second.length || sha256_hex(bytes) != it->second.sha256) {
    throw IntegrityError("cache entry " + std::string(to_string(key.ns)) + "/" + key.digest +
                         " fails its checksum");
  }
  return bytes;
}

void Cache::put(const CacheKey& key, std::string_view payload) {
  std::unique_lock lock(mutex_);
  FileLock flock(dir(key.ns) / ".lock");
  auto& index = index_[key.ns];
  load(key.ns, index);  // pick up other writers

  const std::string checksum = sha256_hex(payload);
  if (auto it = index.find(key.digest); it != index.end()) {
    if (it->second.sha256 == checksum && it->second.length == payload.size()) return;
    throw IntegrityError("cache key " + std::string(to_string(key.ns)) + "/" + key.digest +
                         " already holds different content");
  }

  int seg = 0;
  while (fs::exists(dir(key.ns) / (segment_name(seg + 1) + ".idx"))) ++seg;
  fs::path data = dir(key.ns) / (segment_name(seg) + ".jsonl");
  std::uint64_t offset = fs::exists(data) ? fs::file_size(data) : 0;
  if (offset > 0 && offset + payload.size() > segment_limit_) {
    ++seg;
    data = dir(key.ns) / (segment_name(seg) + ".jsonl");
    offset = fs::exists(data) ? fs::file_size(data) : 0;
  }

  {
    std::ofstream out(data, std::ios::binary | std::ios::app);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    out.flush();
    if (!out) throw Error("failed writing " + data.string());
  }
  const json line = {{"key", key.digest},
                     {"offset", offset},
                     {"length", payload.size()},
                     {"sha256", checksum}};
  {
    std::ofstream idx(dir(key.ns) / (segment_name(seg) + ".idx"), std::ios::app);
    idx << line.dump() << '\n';
    idx.flush();
    if (!idx) throw Error("failed writing cache index");
  }
  index[key.digest] = {segment_name(seg), offset, payload.size(), checksum};
}

std::size_t Cache::size(CacheNamespace ns) const {
  std::shared_lock lock(mutex_);
  return index_.at(ns).size();
}

// ---------------------------------------------------------------------------

namespace {

json sampling_fields(const SamplingParams& s) {
  return {{"temperature", s.temperature},
          {"top_p", s.top_p},
          {"seed", s.seed ? json(*s.seed) : json(nullptr)}};
}

}  // namespace

CachingBackend::CachingBackend(Backend& inner, Cache& cache) : inner_(inner), cache_(cache) {}

std::string CachingBackend::do_generate(const GenerationRequest& req) {
  const auto key = CacheKey::make(CacheNamespace::generation,
                                  {{"op", "generate"},
                                   {"model", inner_.descriptor().model_name},
                                   {"prompt_sha256", sha256_hex(req.prompt)},
                                   {"max_new_tokens", req.max_new_tokens},
                                   {"sampling", sampling_fields(req.sampling)}});
  if (auto hit = cache_.get(key)) return json::parse(*hit).at("text").get<std::string>();
  ++forwarded_;
  std::string text = inner_.generate(req);
  cache_.put(key, json{{"text", text}}.dump() + "\n");
  return text;
}

std::vector<double> CachingBackend::do_score_continuations(const ContinuationScoreRequest& req) {
  const auto key = CacheKey::make(CacheNamespace::continuation_scores,
                                  {{"op", "score"},
                                   {"model", inner_.descriptor().model_name},
                                   {"prompt_sha256", sha256_hex(req.prompt)},
                                   {"candidates", req.candidates}});
  if (auto hit = cache_.get(key)) {
    return json::parse(*hit).at("logprobs").get<std::vector<double>>();
  }
  ++forwarded_;
  std::vector<double> out;
  for (const auto& s : inner_.score_continuations(req)) out.push_back(s.logprob);
  cache_.put(key, json{{"logprobs", out}}.dump() + "\n");
  return out;
}

ChoiceHistogram CachingBackend::do_sample_choice(const ChoiceSampleRequest& req) {
  const auto key = CacheKey::make(CacheNamespace::continuation_scores,
                                  {{"op", "sample"},
                                   {"model", inner_.descriptor().model_name},
                                   {"prompt_sha256", sha256_hex(req.prompt)},
                                   {"choices", req.choices},
                                   {"n", req.n},
                                   {"sampling", sampling_fields(req.sampling)}});
  if (auto hit = cache_.get(key)) {
    return {req.choices, json::parse(*hit).at("counts").get<std::vector<std::uint64_t>>()};
  }
  ++forwarded_;
  ChoiceHistogram hist = inner_.sample_choice(req);
  cache_.put(key, json{{"counts", hist.counts}}.dump() + "\n");
  return hist;
}

}  // namespace synthref
