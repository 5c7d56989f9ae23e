#pragma once

#include "core/dataset.hpp"
#include "core/text.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace ovql::harness {

// Text embedding backend. Implementations must be deterministic and return
// unit-norm vectors of a fixed dimension.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<float> embed(const std::string& text) = 0;
    virtual std::size_t dimension() const = 0;
};

inline double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("embedding dimensions differ");
    double dot = 0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += static_cast<double>(a[i]) * b[i];
    return dot;
}

// Precomputed vectors, one line per instance: id<TAB>v1,v2,...,vd
// Texts are resolved to ids through the corpus they were computed for.
class FileEmbeddingProvider : public EmbeddingProvider {
public:
    FileEmbeddingProvider(const std::filesystem::path& path, const dataset::Corpus& corpus) {
        std::ifstream in(path);
        if (!in.good())
            throw std::runtime_error("cannot open embedding file: " + path.string());
        std::unordered_map<std::string, std::vector<float>> by_id;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos)
                throw std::runtime_error("embedding line has no tab separator");
            std::string id = line.substr(0, tab);
            std::vector<float> vec;
            for (const auto& piece : text::split(line.substr(tab + 1), ','))
                vec.push_back(std::stof(piece));
            normalize(vec);
            if (dim_ == 0) dim_ = vec.size();
            if (vec.size() != dim_)
                throw std::runtime_error("embedding dimension mismatch for id " + id);
            by_id.emplace(std::move(id), std::move(vec));
        }
        for (const auto& inst : corpus.instances) {
            auto it = by_id.find(inst.id);
            if (it != by_id.end()) by_text_.emplace(inst.nl, it->second);
        }
    }

    std::vector<float> embed(const std::string& text) override {
        auto it = by_text_.find(text);
        if (it == by_text_.end())
            throw std::runtime_error("no precomputed embedding for text: " + text);
        return it->second;
    }

    std::size_t dimension() const override { return dim_; }

private:
    static void normalize(std::vector<float>& v) {
        double norm = 0;
        for (float x : v) norm += static_cast<double>(x) * x;
        norm = std::sqrt(norm);
        if (norm > 0)
            for (float& x : v) x = static_cast<float>(x / norm);
    }

    std::unordered_map<std::string, std::vector<float>> by_text_;
    std::size_t dim_ = 0;
};

// Remote embedding service: POST <base>/embed with {"text": ...}, expecting
// {"vector": [...]}. Vectors are re-normalized on receipt. Declared here,
// implemented in harness.cpp where the HTTP client lives.
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(std::string base_url) : base_url_(std::move(base_url)) {}
    std::vector<float> embed(const std::string& text) override;
    std::size_t dimension() const override { return dim_; }

private:
    std::string base_url_;
    std::size_t dim_ = 0;
};

// Deterministic character-trigram hashing, unit-normalized. No external
// model: similarity is crude but stable, which is what the offline tooling
// and the tests need.
class HashEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(std::size_t dim = 256) : dim_(dim) {}

    std::vector<float> embed(const std::string& input) override {
        std::vector<float> v(dim_, 0.0f);
        std::string lowered = text::to_lower_ascii(input);
        std::string padded = "  " + lowered + "  ";
        for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
            std::size_t h = std::hash<std::string_view>{}(std::string_view(padded).substr(i, 3));
            v[h % dim_] += 1.0f;
        }
        double norm = 0;
        for (float x : v) norm += static_cast<double>(x) * x;
        norm = std::sqrt(norm);
        if (norm > 0)
            for (float& x : v) x = static_cast<float>(x / norm);
        else
            v[0] = 1.0f;
        return v;
    }

    std::size_t dimension() const override { return dim_; }

private:
    std::size_t dim_;
};

}  // namespace ovql::harness
