#include "fbe/predictor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include "fbe/random.hpp"

extern char** environ;

namespace fbe {

namespace {

std::string origin_text(const Index3& o) {
  return "(" + std::to_string(o[0]) + ", " + std::to_string(o[1]) + ", " + std::to_string(o[2]) + ")";
}

}  // namespace

PredictorError::PredictorError(const std::string& what, std::optional<Index3> origin)
    : std::runtime_error(what), origin_(origin) {}

const char* to_string(Backend backend) {
  switch (backend) {
    case Backend::oracle: return "oracle";
    case Backend::noisy_oracle: return "noisy_oracle";
    case Backend::external: return "external";
    case Backend::constant: return "constant";
  }
  return "unknown";
}

PredictorHandle::PredictorHandle(std::string id, std::int64_t window, Backend backend,
                                 std::shared_ptr<const Predictor> impl)
    : id_(std::move(id)), window_(window), backend_(backend), impl_(std::move(impl)) {
  if (window_ <= 0) throw std::invalid_argument("predictor window must be positive");
  if (!impl_) throw std::invalid_argument("predictor implementation is null");
}

Volume PredictorHandle::predict(const Index3& origin, const Volume& patch) const {
  const Index3 expect{window_, window_, window_};
  if (patch.dims() != expect)
    throw std::invalid_argument("predictor '" + id_ + "' expects a " + std::to_string(window_) +
                                "^3 patch");
  Volume out = impl_->predict(origin, patch);
  if (out.dims() != expect)
    throw PredictorError("predictor '" + id_ + "' returned a patch of the wrong size", origin);
  for (auto& v : out.data()) {
    if (std::isnan(v)) throw PredictorError("predictor '" + id_ + "' returned NaN", origin);
    v = std::clamp(v, 0.0f, 1.0f);
  }
  out.set_kind(VolumeKind::probability);
  return out;
}

void NoiseSpec::validate() const {
  if (fp_blob_rate < 0 || fn_hole_rate < 0 || per_voxel_fp < 0)
    throw std::invalid_argument("noise rates must be non-negative");
  if (per_voxel_fp >= 1.0) throw std::invalid_argument("per_voxel_fp must be < 1");
  if (fp_blob_radius_min < 0 || fp_blob_radius_max < fp_blob_radius_min)
    throw std::invalid_argument("invalid blob radius range");
}

// ---------------------------------------------------------------------------

namespace {

class OraclePredictor : public Predictor {
 public:
  explicit OraclePredictor(std::shared_ptr<const Volume> gt) : gt_(std::move(gt)) {}

  Volume predict(const Index3& origin, const Volume& patch) const override {
    Volume out(patch.dims(), patch.spacing(), VolumeKind::probability);
    const BoundingBox win{origin,
                          {origin[0] + patch.dims()[0], origin[1] + patch.dims()[1],
                           origin[2] + patch.dims()[2]}};
    const auto overlap = intersect(win, BoundingBox::full(gt_->dims()));
    if (!overlap) return out;
    const BoundingBox& o = *overlap;
    const std::size_t run = static_cast<std::size_t>(o.extent(2));
    for (std::int64_t i = o.min[0]; i < o.max[0]; ++i)
      for (std::int64_t j = o.min[1]; j < o.max[1]; ++j) {
        const float* src = &gt_->data()[gt_->offset(i, j, o.min[2])];
        float* dst = &out.data()[out.offset(i - origin[0], j - origin[1], o.min[2] - origin[2])];
        std::copy(src, src + run, dst);
      }
    return out;
  }

 protected:
  std::shared_ptr<const Volume> gt_;
};

class NoisyOraclePredictor : public OraclePredictor {
 public:
  NoisyOraclePredictor(std::shared_ptr<const Volume> gt, const NoiseSpec& noise,
                       std::uint64_t model_seed, std::uint64_t master_seed)
      : OraclePredictor(std::move(gt)),
        noise_(noise),
        key_(hash_key(master_seed, model_seed, noise.seed_offset)) {}

  Volume predict(const Index3& origin, const Volume& patch) const override {
    Volume out = OraclePredictor::predict(origin, patch);
    const Index3& d = out.dims();

    Rng events(hash_key(key_, 0x626c6f62ULL, origin[0], origin[1], origin[2]));
    const std::int64_t blobs = events.poisson(noise_.fp_blob_rate);
    for (std::int64_t b = 0; b < blobs; ++b) paint_sphere(out, events, 1.0f);

    if (noise_.per_voxel_fp > 0.0) {
      const double p = noise_.per_voxel_fp;
      for (std::int64_t i = 0; i < d[0]; ++i)
        for (std::int64_t j = 0; j < d[1]; ++j)
          for (std::int64_t k = 0; k < d[2]; ++k) {
            float& v = out.at(i, j, k);
            if (v != 0.0f) continue;
            const double u =
                unit_double(hash_key(key_, origin[0] + i, origin[1] + j, origin[2] + k));
            if (u < p) v = 1.0f;
          }
    }

    const std::int64_t holes = events.poisson(noise_.fn_hole_rate);
    for (std::int64_t h = 0; h < holes; ++h) paint_sphere(out, events, 0.0f);
    return out;
  }

 private:
  void paint_sphere(Volume& out, Rng& rng, float value) const {
    const Index3& d = out.dims();
    const double ci = rng.uniform(0.0, double(d[0]));
    const double cj = rng.uniform(0.0, double(d[1]));
    const double ck = rng.uniform(0.0, double(d[2]));
    const double r = rng.uniform(noise_.fp_blob_radius_min, noise_.fp_blob_radius_max);
    const double r2 = r * r;
    auto lo = [&](double c) { return std::max<std::int64_t>(0, std::int64_t(std::floor(c - r))); };
    auto hi = [&](double c, std::int64_t n) {
      return std::min<std::int64_t>(n, std::int64_t(std::ceil(c + r)) + 1);
    };
    for (std::int64_t i = lo(ci); i < hi(ci, d[0]); ++i)
      for (std::int64_t j = lo(cj); j < hi(cj, d[1]); ++j)
        for (std::int64_t k = lo(ck); k < hi(ck, d[2]); ++k) {
          // Voxel centers sit at integer + 0.5.
          const double di = i + 0.5 - ci, dj = j + 0.5 - cj, dk = k + 0.5 - ck;
          if (di * di + dj * dj + dk * dk <= r2) out.at(i, j, k) = value;
        }
  }

  NoiseSpec noise_;
  std::uint64_t key_;
};

class ConstantPredictor : public Predictor {
 public:
  explicit ConstantPredictor(float value) : value_(value) {}
  Volume predict(const Index3&, const Volume& patch) const override {
    return Volume(patch.dims(), patch.spacing(), VolumeKind::probability, value_);
  }

 private:
  float value_;
};

// ---------------------------------------------------------------------------
// External process backend.

class ExternalPredictor : public Predictor {
 public:
  ExternalPredictor(const std::vector<std::string>& command, std::int64_t window,
                    std::chrono::milliseconds timeout)
      : window_(window), timeout_(timeout) {
    if (command.empty()) throw PredictorError("external predictor: empty command");
    ignore_sigpipe();
    spawn(command);
    try {
      handshake();
    } catch (...) {
      shutdown();
      throw;
    }
  }

  ~ExternalPredictor() override { shutdown(); }

  Volume predict(const Index3& origin, const Volume& patch) const override {
    std::lock_guard lock(mutex_);
    if (dead_) throw PredictorError("external predictor is no longer running", origin);
    const std::size_t n = patch.size();
    std::string frame(3 * sizeof(std::int64_t) + n * sizeof(float), '\0');
    std::memcpy(frame.data(), origin.data(), 3 * sizeof(std::int64_t));
    std::memcpy(frame.data() + 3 * sizeof(std::int64_t), patch.data().data(), n * sizeof(float));
    try {
      write_all(frame.data(), frame.size());
      Volume out(patch.dims(), patch.spacing(), VolumeKind::probability);
      read_all(reinterpret_cast<char*>(out.data().data()), n * sizeof(float));
      return out;
    } catch (const PredictorError& e) {
      dead_ = true;
      throw PredictorError(std::string(e.what()) + " at window " + origin_text(origin), origin);
    }
  }

 private:
  static void ignore_sigpipe() {
    static std::once_flag once;
    std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
  }

  void spawn(const std::vector<std::string>& command) {
    int to_child[2], from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) throw PredictorError("pipe() failed");
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw PredictorError("pipe() failed");
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);

    std::vector<char*> argv;
    for (const auto& a : command) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    const int rc = ::posix_spawnp(&pid_, argv[0], &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
      ::close(to_child[1]);
      ::close(from_child[0]);
      pid_ = -1;
      throw PredictorError("cannot spawn '" + command[0] + "': " + std::strerror(rc));
    }
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  void handshake() {
    char hello[12];
    std::memcpy(hello, protocol::kMagic, 4);
    const std::uint32_t version = protocol::kVersion;
    const auto w = static_cast<std::uint32_t>(window_);
    std::memcpy(hello + 4, &version, 4);
    std::memcpy(hello + 8, &w, 4);
    write_all(hello, sizeof(hello));

    char reply[12];
    read_all(reply, sizeof(reply));
    std::uint32_t their_version, their_window;
    std::memcpy(&their_version, reply + 4, 4);
    std::memcpy(&their_window, reply + 8, 4);
    if (std::memcmp(reply, protocol::kMagic, 4) != 0)
      throw PredictorError("external predictor handshake: bad magic");
    if (their_version != protocol::kVersion)
      throw PredictorError("external predictor handshake: unsupported version " +
                           std::to_string(their_version));
    if (their_window != w)
      throw PredictorError("external predictor handshake: server window " +
                           std::to_string(their_window) + " does not match stage window " +
                           std::to_string(w));
  }

  void write_all(const char* buf, std::size_t len) const {
    while (len > 0) {
      const ssize_t n = ::write(write_fd_, buf, len);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw PredictorError(std::string("external predictor write failed: ") + std::strerror(errno));
      }
      buf += n;
      len -= static_cast<std::size_t>(n);
    }
  }

  void read_all(char* buf, std::size_t len) const {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    while (len > 0) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw PredictorError("external predictor timed out");
      pollfd pfd{read_fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw PredictorError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (ready == 0) throw PredictorError("external predictor timed out");
      const ssize_t n = ::read(read_fd_, buf, len);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw PredictorError(std::string("external predictor read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw PredictorError("external predictor closed its output (process died?)");
      buf += n;
      len -= static_cast<std::size_t>(n);
    }
  }

  void shutdown() {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    write_fd_ = read_fd_ = -1;
    if (pid_ > 0) {
      // Closing stdin asks the child to exit; give it a moment before killing.
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
          pid_ = -1;
          return;
        }
        ::usleep(2000);
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
      pid_ = -1;
    }
  }

  std::int64_t window_;
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  mutable std::mutex mutex_;
  mutable bool dead_ = false;
};

}  // namespace

PredictorHandle make_oracle(std::shared_ptr<const Volume> gt, std::int64_t window, std::string id) {
  if (!gt) throw std::invalid_argument("make_oracle: null ground truth");
  if (gt->kind() != VolumeKind::mask) throw std::invalid_argument("make_oracle: gt must be a mask");
  return {std::move(id), window, Backend::oracle, std::make_shared<OraclePredictor>(std::move(gt))};
}

PredictorHandle make_noisy_oracle(std::shared_ptr<const Volume> gt, std::int64_t window,
                                  const NoiseSpec& noise, std::uint64_t model_seed,
                                  std::uint64_t master_seed, std::string id) {
  if (!gt) throw std::invalid_argument("make_noisy_oracle: null ground truth");
  if (gt->kind() != VolumeKind::mask)
    throw std::invalid_argument("make_noisy_oracle: gt must be a mask");
  noise.validate();
  return {std::move(id), window, Backend::noisy_oracle,
          std::make_shared<NoisyOraclePredictor>(std::move(gt), noise, model_seed, master_seed)};
}

PredictorHandle make_constant(float value, std::int64_t window, std::string id) {
  return {std::move(id), window, Backend::constant, std::make_shared<ConstantPredictor>(value)};
}

PredictorHandle make_external(const std::vector<std::string>& command, std::int64_t window,
                              std::chrono::milliseconds timeout, std::string id) {
  if (window <= 0) throw std::invalid_argument("predictor window must be positive");
  return {std::move(id), window, Backend::external,
          std::make_shared<ExternalPredictor>(command, window, timeout)};
}

}  // namespace fbe
