#pragma once
namespace maxel::cli { int run(int argc, char** argv); }
