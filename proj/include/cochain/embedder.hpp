#pragma once

#include <string>
#include <vector>

namespace cochain {

struct EmbeddingVector {
    std::vector<float> values;
    int dim() const { return static_cast<int>(values.size()); }
};

class Encoder {
public:
    virtual ~Encoder() = default;
    virtual EmbeddingVector encode(const std::string& text) = 0;
    virtual int dim() const = 0;
};

// Deterministic offline encoder: alphanumeric bag-of-words, each token hashed
// (FNV-1a 64) into one of dim buckets, counts L2-normalized. Texts with no
// alphanumeric tokens fall back to hashing the whole canonicalized string as
// a single token, so no non-empty text maps to the zero vector.
class FeatureHashEncoder : public Encoder {
public:
    explicit FeatureHashEncoder(int dim = 256);
    EmbeddingVector encode(const std::string& text) override;
    int dim() const override { return dim_; }

private:
    int dim_;
};

// POSTs {"model": ..., "input": ...} to an embeddings endpoint and accepts a
// bare vector, an array of vectors, or the {"data":[{"embedding":[...]}]}
// shape. Failures raise EncoderUnavailableError.
class RemoteEncoder : public Encoder {
public:
    RemoteEncoder(std::string url, std::string model_id, int dim, int timeout_sec = 30);
    EmbeddingVector encode(const std::string& text) override;
    int dim() const override { return dim_; }

private:
    std::string url_;
    std::string model_id_;
    int dim_;
    int timeout_sec_;
};

// Cosine similarity with double-precision accumulation. Raises
// DimMismatchError on shape mismatch and ZeroVectorError on zero-norm input.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace cochain
