# app/utils package
