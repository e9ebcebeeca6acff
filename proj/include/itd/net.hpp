#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "itd/dataset.hpp"
#include "itd/error.hpp"
#include "itd/image.hpp"
#include "itd/tensor.hpp"

namespace itd {

enum class LayerKind : std::uint8_t {
    conv2d = 0,        // 3x3 kernel, stride 1, zero padding 1
    relu = 1,
    maxpool = 2,       // 2x2, stride 2
    global_avg_pool = 3,
    dense = 4,
    softmax = 5,
};

std::string_view to_string(LayerKind kind);

struct Layer {
    LayerKind kind = LayerKind::relu;
    bool frozen = false;
    double lr_scale = 1.0;  // reduced rate for fine-tuned layers

    // conv2d: in/out channels, weights [out][in][3][3]
    // dense:  in/out units,   weights [out][in]
    int in_ch = 0, out_ch = 0;
    std::vector<double> weights, bias;

    // Adam first/second moments, same layout as the parameters
    std::vector<double> m_w, v_w, m_b, v_b;

    bool has_params() const { return kind == LayerKind::conv2d || kind == LayerKind::dense; }
    std::size_t param_count() const { return weights.size() + bias.size(); }
};

// Per-layer parameter gradients; empty vectors for frozen/parameterless layers.
struct Gradients {
    struct LayerGrad {
        std::vector<double> weights, bias;
    };
    std::vector<LayerGrad> layers;

    void add(const Gradients& other);
};

struct NoForwardCache : Error {
    using Error::Error;
};

// Forward intermediates for one batch: inputs[i] feeds layers[i].
struct ForwardCache {
    std::vector<Tensor> inputs;
    Tensor output;                            // softmax probabilities
    std::vector<std::vector<int>> pool_argmax;  // per maxpool layer, flat input offsets
    bool valid = false;
};

enum class FreezeMode { full, feature_extraction, fine_tune };

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 64;
    int epochs = 20;
    std::uint64_t seed = 0;  // epoch shuffling
    FreezeMode mode = FreezeMode::full;
    int fine_tune_layers = 1;  // k in fine-tune(k)
    int workers = 0;           // 0 = hardware concurrency

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
};

struct Prediction {
    std::vector<LabelClass> labels;
    std::vector<std::array<double, 2>> probabilities;  // [non-malicious, malicious]
};

struct VersionMismatch : Error {
    using Error::Error;
};

struct CorruptFile : Error {
    using Error::Error;
};

class Network {
  public:
    std::vector<Layer> layers;
    std::uint64_t init_seed = 0;
    std::uint64_t adam_steps = 0;

    // input 1x32x32 -> Conv(16) ReLU MaxPool -> Conv(32) ReLU MaxPool
    //               -> GlobalAveragePool -> Dense(2) -> Softmax
    static Network build_default(std::uint64_t seed);

    std::size_t parameter_count() const;

    // batch (n,1,32,32) -> probabilities (n,2); fills `cache` when given
    Tensor forward(const Tensor& batch, ForwardCache* cache = nullptr) const;

    // dlogits is the loss gradient at the pre-softmax boundary
    Gradients backward(const ForwardCache& cache, const Tensor& dlogits) const;

    void adam_step(const Gradients& grads, const TrainConfig& config);

    void apply_freeze_mode(FreezeMode mode, int fine_tune_layers);
    bool any_unfrozen() const;

  private:
    // index of the lowest layer whose parameters still train; backward may
    // stop propagating below it
    int lowest_trainable() const;
};

// mean cross-entropy over the batch plus its gradient w.r.t. the logits
struct LossResult {
    double value = 0.0;
    Tensor dlogits;  // (p - onehot)/n
};

LossResult cross_entropy(const Tensor& probabilities, std::span<const LabelClass> labels);

struct EmptyDataset : Error {
    using Error::Error;
};

// Seeded-shuffle minibatch training; per-sample gradients are reduced in
// sample order so results do not depend on the worker count.
std::vector<EpochStats> train(Network& net, std::span<const BehaviorImage> images,
                              std::span<const LabelClass> labels, const TrainConfig& config);

Tensor images_to_batch(std::span<const BehaviorImage> images);  // pixel/255

Prediction predict(const Network& net, std::span<const BehaviorImage> images, int workers = 0);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

void write_training_log(const std::filesystem::path& path, std::span<const EpochStats> log);

// Layer primitives. Convolutions are 3x3, stride 1, zero padding 1; pooling
// is 2x2 stride 2. Backward passes take the forward input and write any of
// din/dw/db that are non-null.
namespace nnops {

void conv2d_forward(const Tensor& in, const std::vector<double>& w, const std::vector<double>& b,
                    int out_ch, Tensor& out);
void conv2d_backward(const Tensor& in, const std::vector<double>& w, int out_ch, const Tensor& dout,
                     Tensor* din, std::vector<double>* dw, std::vector<double>* db);
void relu_forward(const Tensor& in, Tensor& out);
void relu_backward(const Tensor& in, const Tensor& dout, Tensor& din);
void maxpool_forward(const Tensor& in, Tensor& out, std::vector<int>* argmax);
void maxpool_backward(const Tensor& in, const Tensor& dout, const std::vector<int>& argmax,
                      Tensor& din);
void gap_forward(const Tensor& in, Tensor& out);
void gap_backward(const Tensor& in, const Tensor& dout, Tensor& din);
void dense_forward(const Tensor& in, const std::vector<double>& w, const std::vector<double>& b,
                   int out_units, Tensor& out);
void dense_backward(const Tensor& in, const std::vector<double>& w, int out_units,
                    const Tensor& dout, Tensor* din, std::vector<double>* dw,
                    std::vector<double>* db);
void softmax_forward(const Tensor& in, Tensor& out);

}  // namespace nnops

}  // namespace itd
