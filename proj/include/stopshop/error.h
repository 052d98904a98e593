#pragma once

#include <stdexcept>
#include <string>

namespace stopshop {

/// Base class for every error raised by the pipeline.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyInput : public Error {
public:
    EmptyInput() : Error("empty input: no frames given") {}
};

class ParseError : public Error {
public:
    using Error::Error;
};

/// A frame whose vertex count, triangle count or triangle list differs from frame 0.
class ConnectivityMismatch : public Error {
public:
    explicit ConnectivityMismatch(int frame)
        : Error("connectivity mismatch at frame " + std::to_string(frame)), frame_(frame) {}
    int frame() const { return frame_; }

private:
    int frame_;
};

class InvalidSequence : public Error {
public:
    using Error::Error;
};

class InvalidSeeds : public Error {
public:
    using Error::Error;
};

class DegenerateStar : public Error {
public:
    explicit DegenerateStar(int vertex)
        : Error("all triangles around vertex " + std::to_string(vertex) + " have zero area"),
          vertex_(vertex) {}
    int vertex() const { return vertex_; }

private:
    int vertex_;
};

class OverConstrained : public Error {
public:
    OverConstrained() : Error("every vertex is constrained; mesh too coarse to homogenize") {}
};

class SolveFailure : public Error {
public:
    using Error::Error;
};

class EmptyPiece : public Error {
public:
    explicit EmptyPiece(int piece)
        : Error("library piece " + std::to_string(piece) + " is not used by any frame"),
          piece_(piece) {}
    int piece() const { return piece_; }

private:
    int piece_;
};

class InvalidLibrarySize : public Error {
public:
    using Error::Error;
};

class CapUnreachable : public Error {
public:
    using Error::Error;
};

class EmptyPart : public Error {
public:
    explicit EmptyPart(int part)
        : Error("part " + std::to_string(part + 1) + " has no triangles"), part_(part) {}
    int part() const { return part_; }

private:
    int part_;
};

/// Wraps an error from one pipeline stage with the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace stopshop
